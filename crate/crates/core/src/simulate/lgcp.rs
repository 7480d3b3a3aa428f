use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::poisson::{poisson_count, IntensityFn};
use super::rng::{rng_from_seed, SimRng};
use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;
use crate::raster::RasterDims;

pub const DEFAULT_LGCP_GRID: usize = 256;
/// Largest tolerated share of negative eigenvalue mass; negatives are clipped to zero.
pub const NEGATIVE_MASS_TOL: f64 = 1e-3;

fn fft2(buf: &mut [Complex<f64>], mx: usize, my: usize, fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
    fx.process(buf);
    let mut t = vec![Complex::new(0.0, 0.0); mx * my];
    for iy in 0..my {
        for ix in 0..mx {
            t[ix * my + iy] = buf[iy * mx + ix];
        }
    }
    fy.process(&mut t);
    for ix in 0..mx {
        for iy in 0..my {
            buf[iy * mx + ix] = t[ix * my + iy];
        }
    }
}

/// Exponential-covariance Gaussian field `cov(d) = sigma2 exp(-beta d)` on a regular
/// grid, sampled by embedding the grid in a periodic torus.
#[derive(Clone)]
pub struct CirculantEmbedding {
    window: ObservationWindow,
    dims: RasterDims,
    mx: usize,
    my: usize,
    scale: Vec<f64>,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    torus_factor: usize,
    negative_mass_ratio: f64,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("dims", &self.dims)
            .field("torus", &(self.mx, self.my))
            .field("negative_mass_ratio", &self.negative_mass_ratio)
            .finish()
    }
}

impl CirculantEmbedding {
    /// Tries a torus twice the grid size, then four times, before giving up.
    pub fn new(w: ObservationWindow, dims: RasterDims, sigma2: f64, beta: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::param("sigma2", "must be positive"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::param("beta", "must be positive"));
        }
        if !(dims.nx.is_power_of_two() && dims.ny.is_power_of_two()) || dims.nx < 2 || dims.ny < 2 {
            return Err(Error::param(
                "grid",
                format!("dimensions must be powers of two, got {}x{}", dims.nx, dims.ny),
            ));
        }
        let mut last = 0.0;
        for factor in [2, 4] {
            let e = Self::with_factor(w, dims, sigma2, beta, factor);
            if e.negative_mass_ratio <= NEGATIVE_MASS_TOL {
                return Ok(e);
            }
            last = e.negative_mass_ratio;
        }
        Err(Error::Embedding(format!(
            "negative eigenvalue share {last:.3e} exceeds {NEGATIVE_MASS_TOL:e} on a 4x torus"
        )))
    }

    fn with_factor(w: ObservationWindow, dims: RasterDims, sigma2: f64, beta: f64, factor: usize) -> Self {
        let (mx, my) = (factor * dims.nx, factor * dims.ny);
        let dx = w.width() / dims.nx as f64;
        let dy = w.height() / dims.ny as f64;
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(mx);
        let fy = planner.plan_fft_forward(my);
        let mut buf = Vec::with_capacity(mx * my);
        for iy in 0..my {
            let ly = dy * iy.min(my - iy) as f64;
            for ix in 0..mx {
                let lx = dx * ix.min(mx - ix) as f64;
                let d = (lx * lx + ly * ly).sqrt();
                buf.push(Complex::new(sigma2 * (-beta * d).exp(), 0.0));
            }
        }
        fft2(&mut buf, mx, my, fx.as_ref(), fy.as_ref());
        let total: f64 = buf.iter().map(|c| c.re.abs()).sum();
        let negative: f64 = buf.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
        let n = (mx * my) as f64;
        let scale = buf.iter().map(|c| (c.re.max(0.0) / n).sqrt()).collect();
        Self {
            window: w,
            dims,
            mx,
            my,
            scale,
            fx,
            fy,
            torus_factor: factor,
            negative_mass_ratio: negative / total,
        }
    }

    pub fn torus_factor(&self) -> usize {
        self.torus_factor
    }

    pub fn negative_mass_ratio(&self) -> f64 {
        self.negative_mass_ratio
    }

    pub fn dims(&self) -> RasterDims {
        self.dims
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    /// One field draw at the grid cell centres, row-major with row 0 at `y_min`.
    pub fn sample_field(&self, rng: &mut SimRng) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(s * a, s * b)
            })
            .collect();
        fft2(&mut buf, self.mx, self.my, self.fx.as_ref(), self.fy.as_ref());
        let (nx, ny) = (self.dims.nx, self.dims.ny);
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            out.extend(buf[iy * self.mx..iy * self.mx + nx].iter().map(|c| c.re));
        }
        out
    }
}

/// Log-Gaussian Cox sampler with a fixed log-mean surface and a cached embedding.
#[derive(Debug, Clone)]
pub struct LgcpSampler {
    embedding: CirculantEmbedding,
    log_mean: Vec<f64>,
    sigma2: f64,
}

impl LgcpSampler {
    pub fn new(
        log_mean: &dyn IntensityFn,
        sigma2: f64,
        beta: f64,
        dims: RasterDims,
        w: ObservationWindow,
    ) -> Result<Self> {
        let embedding = CirculantEmbedding::new(w, dims, sigma2, beta)?;
        let (dx, dy) = (w.width() / dims.nx as f64, w.height() / dims.ny as f64);
        let mut mu = Vec::with_capacity(dims.cells());
        for iy in 0..dims.ny {
            for ix in 0..dims.nx {
                let c = Point::new(
                    w.x_min() + (ix as f64 + 0.5) * dx,
                    w.y_min() + (iy as f64 + 0.5) * dy,
                );
                let v = log_mean.intensity(&c);
                if !v.is_finite() {
                    return Err(Error::NonFinite("LGCP log-mean surface"));
                }
                mu.push(v);
            }
        }
        Ok(Self {
            embedding,
            log_mean: mu,
            sigma2,
        })
    }

    pub fn embedding(&self) -> &CirculantEmbedding {
        &self.embedding
    }

    fn cell_area(&self) -> f64 {
        self.embedding.window.area() / self.embedding.dims.cells() as f64
    }

    /// `sum_cells exp(mu + sigma2 / 2) * cell area`.
    pub fn expected_count(&self) -> f64 {
        let a = self.cell_area();
        self.log_mean
            .iter()
            .map(|m| (m + 0.5 * self.sigma2).exp() * a)
            .sum()
    }

    pub fn sample_with(&self, rng: &mut SimRng) -> PointPattern {
        let z = self.embedding.sample_field(rng);
        let w = self.embedding.window;
        let d = self.embedding.dims;
        let (dx, dy) = (w.width() / d.nx as f64, w.height() / d.ny as f64);
        let area = dx * dy;
        let mut pts = Vec::new();
        for iy in 0..d.ny {
            for ix in 0..d.nx {
                let k = iy * d.nx + ix;
                let n = poisson_count(rng, (self.log_mean[k] + z[k]).exp() * area);
                for _ in 0..n {
                    let x = w.x_min() + (ix as f64 + rng.random::<f64>()) * dx;
                    let y = w.y_min() + (iy as f64 + rng.random::<f64>()) * dy;
                    pts.push(Point::new(x.min(w.x_max()), y.min(w.y_max())));
                }
            }
        }
        PointPattern::from_trusted(pts, w)
    }

    pub fn sample(&self, seed: u64) -> PointPattern {
        self.sample_with(&mut rng_from_seed(seed))
    }
}

/// Cox process driven by `exp(mu(u) + Z(u))`, `Z` a zero-mean field with covariance
/// `sigma2 exp(-beta d)` on a `dims` grid.
pub fn sim_lgcp(
    log_mean: &dyn IntensityFn,
    sigma2: f64,
    beta: f64,
    dims: RasterDims,
    w: &ObservationWindow,
    seed: u64,
) -> Result<PointPattern> {
    Ok(LgcpSampler::new(log_mean, sigma2, beta, dims, *w)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_power_of_two_rejected() {
        let w = ObservationWindow::unit_square();
        assert!(CirculantEmbedding::new(w, RasterDims::square(100), 1.0, 2.0).is_err());
    }

    #[test]
    fn scenario_scales_embed() {
        let w = ObservationWindow::unit_square();
        for (s2, b) in [(0.15, 2.0), (5.0, 20.0)] {
            let e = CirculantEmbedding::new(w, RasterDims::square(64), s2, b).unwrap();
            assert!(e.negative_mass_ratio() <= NEGATIVE_MASS_TOL);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let w = ObservationWindow::unit_square();
        let mu = |_: &Point| 125f64.ln() - 0.075;
        let a = sim_lgcp(&mu, 0.15, 2.0, RasterDims::square(32), &w, 11).unwrap();
        let b = sim_lgcp(&mu, 0.15, 2.0, RasterDims::square(32), &w, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|p| w.contains(p)));
    }

    #[test]
    fn expected_count_calibration() {
        let w = ObservationWindow::unit_square();
        let mu = |_: &Point| 125f64.ln() - 0.075;
        let s = LgcpSampler::new(&mu, 0.15, 2.0, RasterDims::square(32), w).unwrap();
        assert!((s.expected_count() - 125.0).abs() < 1e-9);
    }
}
