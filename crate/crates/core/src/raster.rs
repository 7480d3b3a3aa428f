//! Piecewise-constant gridded fields over the observation window.
//!
//! Values are stored row-major with row 0 at `y_min`. Lookup is nearest cell
//! rather than bilinear, so that the integral of the lookup function is exactly
//! the midpoint sum returned by [`surface_integral`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};

/// Default raster resolution per side.
pub const DEFAULT_RASTER: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterDims {
    pub nx: usize,
    pub ny: usize,
}

impl RasterDims {
    pub const fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny }
    }

    pub const fn square(n: usize) -> Self {
        Self { nx: n, ny: n }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }
}

impl Default for RasterDims {
    fn default() -> Self {
        Self::square(DEFAULT_RASTER)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterSurface {
    window: ObservationWindow,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl RasterSurface {
    pub fn new(window: ObservationWindow, dims: RasterDims, values: Vec<f64>) -> Result<Self> {
        let RasterDims { nx, ny } = dims;
        if nx == 0 || ny == 0 {
            return Err(Error::param("raster dims", "cell counts must be positive"));
        }
        if values.len() != nx * ny {
            return Err(Error::Parse(format!(
                "expected {} raster values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("raster values"));
        }
        Ok(Self {
            window,
            nx,
            ny,
            values,
        })
    }

    pub fn constant(window: ObservationWindow, dims: RasterDims, value: f64) -> Result<Self> {
        Self::new(window, dims, vec![value; dims.cells()])
    }

    /// Evaluates `f` at every cell centre.
    pub fn from_fn(
        window: ObservationWindow,
        dims: RasterDims,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(dims.cells());
        for iy in 0..dims.ny {
            for ix in 0..dims.nx {
                values.push(f(cell_centre(&window, dims, ix, iy)));
            }
        }
        Self::new(window, dims, values)
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn dims(&self) -> RasterDims {
        RasterDims::new(self.nx, self.ny)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn cell_width(&self) -> f64 {
        self.window.width() / self.nx as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.window.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.window.area() / (self.nx * self.ny) as f64
    }

    pub fn cell_centre(&self, ix: usize, iy: usize) -> Point {
        cell_centre(&self.window, self.dims(), ix, iy)
    }

    /// Iterator over `(centre, value)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| {
            let (ix, iy) = (k % self.nx, k / self.nx);
            (self.cell_centre(ix, iy), v)
        })
    }

    pub fn at(&self, u: &Point) -> Result<f64> {
        surface_at(self, u)
    }

    pub fn same_grid(&self, other: &RasterSurface) -> bool {
        self.window == other.window && self.nx == other.nx && self.ny == other.ny
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RasterSurface> {
        RasterSurface::new(
            self.window,
            self.dims(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_with(
        &self,
        other: &RasterSurface,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<RasterSurface> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("raster surfaces differ in window or dims"));
        }
        RasterSurface::new(
            self.window,
            self.dims(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn cell_centre(w: &ObservationWindow, dims: RasterDims, ix: usize, iy: usize) -> Point {
    Point::new(
        w.x_min() + (ix as f64 + 0.5) * w.width() / dims.nx as f64,
        w.y_min() + (iy as f64 + 0.5) * w.height() / dims.ny as f64,
    )
}

/// Value of the cell containing `u`.
pub fn surface_at(s: &RasterSurface, u: &Point) -> Result<f64> {
    let (ix, iy) = s
        .window
        .grid_cell(s.nx, s.ny, u)
        .ok_or(Error::OutOfDomain { x: u.x, y: u.y })?;
    Ok(s.value(ix, iy))
}

/// Midpoint-rule integral over the window.
pub fn surface_integral(s: &RasterSurface) -> f64 {
    s.cell_area() * s.values.iter().sum::<f64>()
}
