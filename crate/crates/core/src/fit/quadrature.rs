use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;

pub const MIN_DUMMY_PER_SIDE: usize = 8;

/// Dummy grid side used when none is configured.
pub fn default_dummy_per_side(n_points: usize) -> usize {
    if n_points > 500 {
        100
    } else {
        64
    }
}

/// Data points followed by dummy points, with counting weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureScheme {
    window: ObservationWindow,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    n_data: usize,
}

impl QuadratureScheme {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_data(&self, k: usize) -> bool {
        k < self.n_data
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Dummy points at the centres of a `dummy_per_side^2` tiling; each node in a
/// tile gets `tile area / nodes in tile`.
pub fn make_quadrature(p: &PointPattern, dummy_per_side: usize) -> Result<QuadratureScheme> {
    if dummy_per_side < MIN_DUMMY_PER_SIDE {
        return Err(Error::param(
            "dummy_per_side",
            format!("must be at least {MIN_DUMMY_PER_SIDE}, got {dummy_per_side}"),
        ));
    }
    let w = *p.window();
    let m = dummy_per_side;
    let tile_area = w.area() / (m * m) as f64;

    let mut counts = vec![1usize; m * m];
    let mut data_tile = Vec::with_capacity(p.len());
    for x in p.points() {
        let (ix, iy) = w.grid_cell(m, m, x).expect("pattern points lie in the window");
        counts[iy * m + ix] += 1;
        data_tile.push(iy * m + ix);
    }

    let mut nodes = Vec::with_capacity(p.len() + m * m);
    let mut weights = Vec::with_capacity(p.len() + m * m);
    for (x, &t) in p.points().iter().zip(&data_tile) {
        nodes.push(*x);
        weights.push(tile_area / counts[t] as f64);
    }
    let (dx, dy) = (w.width() / m as f64, w.height() / m as f64);
    for iy in 0..m {
        for ix in 0..m {
            nodes.push(Point::new(
                w.x_min() + (ix as f64 + 0.5) * dx,
                w.y_min() + (iy as f64 + 0.5) * dy,
            ));
            weights.push(tile_area / counts[iy * m + ix] as f64);
        }
    }
    Ok(QuadratureScheme {
        window: w,
        nodes,
        weights,
        n_data: p.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_pattern_uniform_weights() {
        let q = make_quadrature(&PointPattern::empty(ObservationWindow::unit_square()), 10).unwrap();
        assert_eq!(q.len(), 100);
        assert!(q.weights().iter().all(|&w| (w - 0.01).abs() < 1e-15));
        assert_eq!(q.n_data(), 0);
    }

    #[test]
    fn shared_tile_halves_weight() {
        let w = ObservationWindow::unit_square();
        let p = PointPattern::new(vec![Point::new(0.03, 0.07)], w).unwrap();
        let q = make_quadrature(&p, 10).unwrap();
        assert!(q.is_data(0) && !q.is_data(1));
        assert!((q.weights()[0] - 0.005).abs() < 1e-15);
        // dummy at the centre of tile (0, 0) is node 1
        assert_eq!(q.nodes()[1], Point::new(0.05, 0.05));
        assert!((q.weights()[1] - 0.005).abs() < 1e-15);
        assert!((q.weights()[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn too_coarse_rejected() {
        let p = PointPattern::empty(ObservationWindow::unit_square());
        assert!(make_quadrature(&p, 7).is_err());
    }

    proptest! {
        #[test]
        fn weights_partition_window(
            coords in prop::collection::vec((0.0f64..=3.0, -1.0f64..=1.0), 0..200),
            m in 8usize..40,
        ) {
            let w = ObservationWindow::new(0.0, 3.0, -1.0, 1.0).unwrap();
            let p = PointPattern::new(coords.into_iter().map(Point::from).collect(), w).unwrap();
            let q = make_quadrature(&p, m).unwrap();
            prop_assert!((q.total_weight() - w.area()).abs() < 1e-12);
            prop_assert!(q.weights().iter().all(|&v| v > 0.0));
        }
    }
}
