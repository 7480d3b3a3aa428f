//! Planar geometry: points and axis-aligned rectangular observation windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]` with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct ObservationWindow {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

#[derive(Deserialize)]
struct RawWindow {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl TryFrom<RawWindow> for ObservationWindow {
    type Error = Error;

    fn try_from(raw: RawWindow) -> Result<Self> {
        ObservationWindow::new(raw.x_min, raw.x_max, raw.y_min, raw.y_max)
    }
}

impl ObservationWindow {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidWindow("bounds must be finite".into()));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidWindow(format!(
                "need x_max > x_min and y_max > y_min, got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn unit_square() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn shorter_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn centre(&self) -> Point {
        Point::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Closed-boundary membership.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// The window grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            x_min: self.x_min - margin,
            x_max: self.x_max + margin,
            y_min: self.y_min - margin,
            y_max: self.y_max + margin,
        }
    }

    /// Cell of a regular `nx x ny` partition containing `p`, or `None` if `p` is outside.
    ///
    /// A point on an edge shared by two cells goes to the lower-index cell; the
    /// outer boundary belongs to the adjacent interior cell.
    pub fn grid_cell(&self, nx: usize, ny: usize, p: &Point) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let ix = axis_cell((p.x - self.x_min) / self.width() * nx as f64, nx);
        let iy = axis_cell((p.y - self.y_min) / self.height() * ny as f64, ny);
        Some((ix, iy))
    }
}

#[inline]
fn axis_cell(t: f64, n: usize) -> usize {
    let k = t.ceil() - 1.0;
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

/// |W|, the Lebesgue measure of the window.
pub fn window_area(w: &ObservationWindow) -> f64 {
    w.area()
}
