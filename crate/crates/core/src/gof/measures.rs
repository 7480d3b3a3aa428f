use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;
use crate::raster::RasterSurface;

pub const DEFAULT_QUADRATS: usize = 5;

/// A `rows x cols` grid of disjoint rectangular tiles covering the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratPartition {
    pub window: ObservationWindow,
    pub rows: usize,
    pub cols: usize,
}

impl QuadratPartition {
    pub fn new(window: ObservationWindow, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("quadrats", "rows and cols must be positive"));
        }
        Ok(Self { window, rows, cols })
    }

    pub fn tiles(&self) -> usize {
        self.rows * self.cols
    }

    /// `(row, col)` of the tile containing `u`; shared edges go to the lower index.
    pub fn tile_of(&self, u: &Point) -> Option<(usize, usize)> {
        self.window
            .grid_cell(self.cols, self.rows, u)
            .map(|(ix, iy)| (iy, ix))
    }

    pub fn tile_window(&self, row: usize, col: usize) -> Result<ObservationWindow> {
        let w = &self.window;
        let dx = w.width() / self.cols as f64;
        let dy = w.height() / self.rows as f64;
        ObservationWindow::new(
            w.x_min() + col as f64 * dx,
            w.x_min() + (col + 1) as f64 * dx,
            w.y_min() + row as f64 * dy,
            w.y_min() + (row + 1) as f64 * dy,
        )
    }
}

/// Mean over estimates of the midpoint-rule integral of `(estimate - truth)^2`.
pub fn mise(estimates: &[RasterSurface], truth: &RasterSurface) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::NoData("mise needs at least one estimate"));
    }
    let mut total = 0.0;
    for e in estimates {
        if !e.same_grid(truth) {
            return Err(Error::GridMismatch("estimate and truth rasters differ"));
        }
        let sq: f64 = e
            .values()
            .iter()
            .zip(truth.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += sq * truth.cell_area();
    }
    Ok(total / estimates.len() as f64)
}

/// Observed tile counts and fitted tile masses, row-major over tiles.
pub fn tile_counts_and_masses(
    p: &PointPattern,
    fitted: &RasterSurface,
    q: &QuadratPartition,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if fitted.window() != &q.window || p.window() != &q.window {
        return Err(Error::GridMismatch("pattern, surface and partition windows differ"));
    }
    let mut counts = vec![0.0; q.tiles()];
    for x in p.points() {
        let (r, c) = q.tile_of(x).expect("pattern points lie in the window");
        counts[r * q.cols + c] += 1.0;
    }
    let mut mass = vec![0.0; q.tiles()];
    let a = fitted.cell_area();
    for (u, v) in fitted.cells() {
        let (r, c) = q.tile_of(&u).expect("cell centres lie in the window");
        mass[r * q.cols + c] += v * a;
    }
    Ok((counts, mass))
}

/// `sum_tiles (n_i - m_i)^2 / m_i`, `m_i` the fitted mass of tile `i`.
pub fn pearson_chi2(p: &PointPattern, fitted: &RasterSurface, q: &QuadratPartition) -> Result<f64> {
    let (counts, mass) = tile_counts_and_masses(p, fitted, q)?;
    let mut stat = 0.0;
    for (k, (&n, &m)) in counts.iter().zip(&mass).enumerate() {
        if m.is_nan() || m <= 0.0 {
            return Err(Error::DegenerateTile {
                row: k / q.cols,
                col: k % q.cols,
            });
        }
        stat += (n - m) * (n - m) / m;
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterDims;

    fn unit() -> ObservationWindow {
        ObservationWindow::unit_square()
    }

    #[test]
    fn mise_examples() {
        let d = RasterDims::square(16);
        let truth = RasterSurface::from_fn(unit(), d, |u| u.x * 3.0).unwrap();
        assert_eq!(mise(&[truth.clone(), truth.clone()], &truth).unwrap(), 0.0);
        let biased = truth.map(|v| v + 2.0).unwrap();
        assert!((mise(&[biased], &truth).unwrap() - 4.0).abs() < 1e-12);
        let zero = RasterSurface::constant(unit(), d, 0.0).unwrap();
        let one = RasterSurface::constant(unit(), d, 1.0).unwrap();
        let r3 = RasterSurface::constant(unit(), d, 3f64.sqrt()).unwrap();
        assert!((mise(&[one, r3], &zero).unwrap() - 2.0).abs() < 1e-12);
        let other = RasterSurface::constant(unit(), RasterDims::square(8), 0.0).unwrap();
        assert!(matches!(mise(&[other], &zero), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn degenerate_tile_is_named() {
        let q = QuadratPartition::new(unit(), 2, 2).unwrap();
        let s = RasterSurface::from_fn(unit(), RasterDims::square(4), |u| {
            if u.x > 0.5 && u.y > 0.5 {
                0.0
            } else {
                1.0
            }
        })
        .unwrap();
        let p = PointPattern::empty(unit());
        assert!(matches!(
            pearson_chi2(&p, &s, &q),
            Err(Error::DegenerateTile { row: 1, col: 1 })
        ));
    }
}
