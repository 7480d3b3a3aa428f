use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::optim::minimise_scalar;
use crate::pattern::PointPattern;
use crate::raster::{RasterDims, RasterSurface};

const LCV_GRID: usize = 40;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gauss(t: f64, h: f64) -> f64 {
    INV_SQRT_2PI / h * (-0.5 * (t / h) * (t / h)).exp()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Mass of the Gaussian kernel centred at `x` that falls inside the window.
fn edge_mass(p: &PointPattern, x: &Point, h: f64) -> f64 {
    let w = p.window();
    let fx = std_normal_cdf((w.x_max() - x.x) / h) - std_normal_cdf((w.x_min() - x.x) / h);
    let fy = std_normal_cdf((w.y_max() - x.y) / h) - std_normal_cdf((w.y_min() - x.y) / h);
    fx * fy
}

/// 1-D kernel values `g[c * n + i] = k_h(centre_c - coord_i)`.
fn axis_kernel(centres: &[f64], coords: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(centres.len() * coords.len());
    for &c in centres {
        g.extend(coords.iter().map(|&x| gauss(c - x, h)));
    }
    g
}

fn cell_centres(s: &RasterSurface) -> (Vec<f64>, Vec<f64>) {
    let xs = (0..s.nx()).map(|ix| s.cell_centre(ix, 0).x).collect();
    let ys = (0..s.ny()).map(|iy| s.cell_centre(0, iy).y).collect();
    (xs, ys)
}

/// `sum_i weight_i k_h(u - x_i)` on the raster cells of `grid`.
fn kernel_sum(grid: &RasterSurface, p: &PointPattern, h: f64, weight: &[f64]) -> Vec<f64> {
    let (xs, ys) = cell_centres(grid);
    let px: Vec<f64> = p.points().iter().map(|q| q.x).collect();
    let py: Vec<f64> = p.points().iter().map(|q| q.y).collect();
    let n = p.len();
    let gx = axis_kernel(&xs, &px, h);
    let gy = axis_kernel(&ys, &py, h);
    let nx = xs.len();
    (0..grid.dims().cells())
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % nx, k / nx);
            let rx = &gx[ix * n..(ix + 1) * n];
            let ry = &gy[iy * n..(iy + 1) * n];
            (0..n).map(|i| rx[i] * ry[i] * weight[i]).sum()
        })
        .collect()
}

/// Edge-corrected Gaussian kernel intensity `sum_i k_h(u - x_i) / c_h(x_i)`, where
/// `c_h(x) = int_W k_h(v - x) dv`. `None` selects the bandwidth by likelihood cross-validation.
pub fn kernel_intensity(
    p: &PointPattern,
    bandwidth: Option<f64>,
    dims: RasterDims,
) -> Result<RasterSurface> {
    if p.is_empty() {
        return Err(Error::NoData("kernel intensity needs at least one point"));
    }
    let h = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(_) => return Err(Error::param("bandwidth", "must be positive")),
        None => likelihood_cv_bandwidth(p)?,
    };
    let inv_mass: Vec<f64> = p.points().iter().map(|x| 1.0 / edge_mass(p, x, h)).collect();
    let grid = RasterSurface::constant(*p.window(), dims, 0.0)?;
    let values = kernel_sum(&grid, p, h, &inv_mass);
    RasterSurface::new(*p.window(), dims, values)
}

/// Leave-one-out Poisson likelihood cross-validation score `sum_i log rho_{-i}(x_i)`.
pub fn likelihood_cv_score(p: &PointPattern, h: f64) -> f64 {
    let pts = p.points();
    let log_mass: Vec<f64> = pts.iter().map(|x| edge_mass(p, x, h).ln()).collect();
    let log_norm = -(2.0 * std::f64::consts::PI * h * h).ln();
    let inv = -0.5 / (h * h);
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let terms: Vec<f64> = (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| pts[i].dist2(&pts[j]) * inv - log_mass[j])
                .collect();
            let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let s: f64 = terms.iter().map(|t| (t - top).exp()).sum();
            log_norm + top + s.ln()
        })
        .sum()
}

/// Bandwidth maximising [`likelihood_cv_score`] over `[d_min, diag(W)/2]`.
pub fn likelihood_cv_bandwidth(p: &PointPattern) -> Result<f64> {
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    let pts = p.points();
    let mut d_min = f64::INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d = a.dist(b);
            if d > 0.0 && d < d_min {
                d_min = d;
            }
        }
    }
    if !d_min.is_finite() {
        return Err(Error::NoData("all points coincide; no positive pair distance"));
    }
    let hi = 0.5 * p.window().diagonal();
    Ok(minimise_scalar(|h| -likelihood_cv_score(p, h), d_min.min(hi), hi, LCV_GRID))
}

/// `s(u) = sum_i k_h(u - x_i) - int_W k_h(u - v) fitted(v) dv`, integral by the midpoint rule
/// on the raster of `fitted`.
pub fn smoothed_raw_residuals(
    p: &PointPattern,
    fitted: &RasterSurface,
    bandwidth: f64,
) -> Result<RasterSurface> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::param("bandwidth", "must be positive"));
    }
    if fitted.window() != p.window() {
        return Err(Error::GridMismatch("fitted surface must cover the pattern window"));
    }
    let h = bandwidth;
    let (nx, ny) = (fitted.nx(), fitted.ny());
    let mut values = kernel_sum(fitted, p, h, &vec![1.0; p.len()]);

    let (xs, ys) = cell_centres(fitted);
    let gx = axis_kernel(&xs, &xs, h);
    let gy = axis_kernel(&ys, &ys, h);
    let f = fitted.values();
    // Separable convolution: rows first, then columns.
    let mut tmp = vec![0.0; nx * ny];
    for iy in 0..ny {
        let row = &f[iy * nx..(iy + 1) * nx];
        for ix in 0..nx {
            let g = &gx[ix * nx..(ix + 1) * nx];
            tmp[iy * nx + ix] = g.iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    let area = fitted.cell_area();
    for iy in 0..ny {
        let g = &gy[iy * ny..(iy + 1) * ny];
        for ix in 0..nx {
            let conv: f64 = (0..ny).map(|jy| g[jy] * tmp[jy * nx + ix]).sum();
            values[iy * nx + ix] -= area * conv;
        }
    }
    RasterSurface::new(*p.window(), fitted.dims(), values)
}
