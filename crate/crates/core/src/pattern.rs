use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};

/// A finite point configuration observed inside a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointPattern {
    points: Vec<Point>,
    window: ObservationWindow,
}

impl PointPattern {
    pub fn new(points: Vec<Point>, window: ObservationWindow) -> Result<Self> {
        for p in &points {
            if !p.is_finite() {
                return Err(Error::NonFinite("point coordinates"));
            }
            if !window.contains(p) {
                return Err(Error::PointOutsideWindow { x: p.x, y: p.y });
            }
        }
        Ok(Self { points, window })
    }

    pub fn empty(window: ObservationWindow) -> Self {
        Self {
            points: Vec::new(),
            window,
        }
    }

    /// For generators that have already checked membership.
    pub(crate) fn from_trusted(points: Vec<Point>, window: ObservationWindow) -> Self {
        debug_assert!(points.iter().all(|p| window.contains(p)));
        Self { points, window }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// n / |W|
    pub fn stationary_intensity(&self) -> f64 {
        self.len() as f64 / self.window.area()
    }

    /// Union of two patterns on the same window.
    pub fn superpose(&self, other: &PointPattern) -> Result<PointPattern> {
        if self.window != other.window {
            return Err(Error::Config("cannot superpose patterns on different windows".into()));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Ok(Self::from_trusted(points, self.window))
    }

    /// Number of unordered pairs closer than `r` (strict).
    pub fn close_pairs(&self, r: f64) -> usize {
        let r2 = r * r;
        let mut count = 0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if a.dist2(b) < r2 {
                    count += 1;
                }
            }
        }
        count
    }
}

/// A point pattern carrying one real mark per point.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPattern {
    pattern: PointPattern,
    marks: Vec<f64>,
}

impl MarkedPattern {
    pub fn new(pattern: PointPattern, marks: Vec<f64>) -> Result<Self> {
        if marks.len() != pattern.len() {
            return Err(Error::MarkCount {
                marks: marks.len(),
                points: pattern.len(),
            });
        }
        if !marks.iter().all(|m| m.is_finite()) {
            return Err(Error::NonFinite("marks"));
        }
        Ok(Self { pattern, marks })
    }

    pub fn pattern(&self) -> &PointPattern {
        &self.pattern
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.pattern.points().iter().zip(self.marks.iter().copied())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct MarkedRow {
    pub x: f64,
    pub y: f64,
    pub phi_star: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_closed() {
        let w = ObservationWindow::unit_square();
        assert!(PointPattern::new(vec![Point::new(0.0, 1.0), Point::new(1.0, 0.0)], w).is_ok());
        assert!(matches!(
            PointPattern::new(vec![Point::new(1.0 + 1e-9, 0.5)], w),
            Err(Error::PointOutsideWindow { .. })
        ));
        assert!(matches!(
            PointPattern::new(vec![Point::new(f64::NAN, 0.5)], w),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn marks_must_match() {
        let w = ObservationWindow::unit_square();
        let p = PointPattern::new(vec![Point::new(0.2, 0.2)], w).unwrap();
        assert!(MarkedPattern::new(p.clone(), vec![]).is_err());
        assert!(MarkedPattern::new(p.clone(), vec![f64::INFINITY]).is_err());
        assert!(MarkedPattern::new(p, vec![1.5]).is_ok());
    }

    #[test]
    fn close_pairs_counts_strictly() {
        let w = ObservationWindow::unit_square();
        let p = PointPattern::new(
            vec![Point::new(0.1, 0.1), Point::new(0.2, 0.1), Point::new(0.9, 0.9)],
            w,
        )
        .unwrap();
        assert_eq!(p.close_pairs(0.1 + 1e-12), 1);
        assert_eq!(p.close_pairs(0.05), 0);
    }
}
