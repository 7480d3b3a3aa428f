use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::optim::minimise_scalar;
use crate::pattern::MarkedPattern;
use crate::raster::{RasterDims, RasterSurface};

/// Distance below which an IDW target is treated as coinciding with a data point.
pub const IDW_COINCIDENCE_TOL: f64 = 1e-12;
/// Kernel-weight denominators below this fall back to the nearest data mark.
const KERNEL_UNDERFLOW: f64 = 1e-300;
const LSCV_GRID: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    Indicator,
    Idw,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSpec {
    pub method: InterpolationMethod,
    #[serde(default = "default_power")]
    pub idw_power: f64,
    /// `None` selects the bandwidth by least-squares cross-validation.
    #[serde(default)]
    pub kernel_bandwidth: Option<f64>,
}

fn default_power() -> f64 {
    2.0
}

impl InterpolationSpec {
    pub fn indicator() -> Self {
        Self {
            method: InterpolationMethod::Indicator,
            idw_power: 2.0,
            kernel_bandwidth: None,
        }
    }

    pub fn idw(power: f64) -> Self {
        Self {
            method: InterpolationMethod::Idw,
            idw_power: power,
            kernel_bandwidth: None,
        }
    }

    pub fn kernel(bandwidth: Option<f64>) -> Self {
        Self {
            method: InterpolationMethod::Kernel,
            idw_power: 2.0,
            kernel_bandwidth: bandwidth,
        }
    }

    /// Fills in a cross-validated kernel bandwidth when none is set.
    pub fn resolved(&self, mp: &MarkedPattern) -> Result<Self> {
        self.validate()?;
        let mut out = *self;
        if self.method == InterpolationMethod::Kernel && self.kernel_bandwidth.is_none() {
            out.kernel_bandwidth = Some(lscv_bandwidth(mp)?);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.idw_power.is_finite() && self.idw_power > 0.0) {
            return Err(Error::param("idw_power", "must be positive"));
        }
        if let Some(h) = self.kernel_bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::param("kernel_bandwidth", "must be positive"));
            }
        }
        Ok(())
    }
}

pub fn idw_at(mp: &MarkedPattern, u: &Point, power: f64) -> f64 {
    let tol2 = IDW_COINCIDENCE_TOL * IDW_COINCIDENCE_TOL;
    let half = 0.5 * power;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, m) in mp.iter() {
        let d2 = u.dist2(x);
        if d2 <= tol2 {
            return m;
        }
        let wt = d2.powf(-half);
        num += wt * m;
        den += wt;
    }
    num / den
}

fn nearest_mark<'a>(items: impl Iterator<Item = (&'a Point, f64)>, u: &Point) -> f64 {
    items
        .fold((f64::INFINITY, f64::NAN), |(bd, bm), (x, m)| {
            let d = u.dist2(x);
            if d < bd {
                (d, m)
            } else {
                (bd, bm)
            }
        })
        .1
}

/// Nadaraya-Watson estimate at `u` with an isotropic Gaussian kernel,
/// optionally leaving out data point `skip`.
fn nw_at(mp: &MarkedPattern, u: &Point, h: f64, skip: Option<usize>) -> f64 {
    let inv = -0.5 / (h * h);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (x, m)) in mp.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let wt = (u.dist2(x) * inv).exp();
        num += wt * m;
        den += wt;
    }
    if den < KERNEL_UNDERFLOW {
        nearest_mark(
            mp.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, v)| v),
            u,
        )
    } else {
        num / den
    }
}

pub fn kernel_smooth_at(mp: &MarkedPattern, u: &Point, h: f64) -> f64 {
    nw_at(mp, u, h, None)
}

/// Interpolated mark at `u`; the kernel bandwidth must already be resolved.
pub fn interpolate_at(mp: &MarkedPattern, spec: &InterpolationSpec, u: &Point) -> Result<f64> {
    match spec.method {
        InterpolationMethod::Indicator => Ok(1.0),
        InterpolationMethod::Idw => Ok(idw_at(mp, u, spec.idw_power)),
        InterpolationMethod::Kernel => {
            let h = spec
                .kernel_bandwidth
                .ok_or_else(|| Error::param("kernel_bandwidth", "must be resolved before pointwise evaluation"))?;
            Ok(nw_at(mp, u, h, None))
        }
    }
}

/// Extends point marks to a raster over the pattern's window.
pub fn interpolate(
    mp: &MarkedPattern,
    spec: &InterpolationSpec,
    dims: RasterDims,
) -> Result<RasterSurface> {
    spec.validate()?;
    if mp.is_empty() {
        return Err(Error::NoData("cannot interpolate marks of an empty pattern"));
    }
    let w = *mp.pattern().window();
    let centres = RasterSurface::constant(w, dims, 0.0)?;
    let eval = |f: &(dyn Fn(&Point) -> f64 + Sync)| -> Result<RasterSurface> {
        let values: Vec<f64> = (0..dims.cells())
            .into_par_iter()
            .map(|k| f(&centres.cell_centre(k % dims.nx, k / dims.nx)))
            .collect();
        RasterSurface::new(w, dims, values)
    };
    match spec.method {
        InterpolationMethod::Indicator => RasterSurface::constant(w, dims, 1.0),
        InterpolationMethod::Idw => eval(&|u| idw_at(mp, u, spec.idw_power)),
        InterpolationMethod::Kernel => {
            let h = match spec.kernel_bandwidth {
                Some(h) => h,
                None => lscv_bandwidth(mp)?,
            };
            eval(&|u| nw_at(mp, u, h, None))
        }
    }
}

/// Leave-one-out squared prediction error of the Nadaraya-Watson smoother.
pub fn lscv_score(mp: &MarkedPattern, h: f64) -> f64 {
    (0..mp.len())
        .into_par_iter()
        .map(|i| {
            let x = mp.pattern().points()[i];
            let e = mp.marks()[i] - nw_at(mp, &x, h, Some(i));
            e * e
        })
        .sum()
}

/// Search interval `[d_min, diag(W)/2]`, `d_min` the smallest positive pair distance.
pub fn lscv_interval(mp: &MarkedPattern) -> Result<(f64, f64)> {
    let pts = mp.pattern().points();
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
    Ok((d_min, 0.5 * mp.pattern().window().diagonal()))
}

/// Bandwidth minimising the least-squares cross-validation score.
pub fn lscv_bandwidth(mp: &MarkedPattern) -> Result<f64> {
    if mp.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: mp.len(),
        });
    }
    let (lo, hi) = lscv_interval(mp)?;
    let first = mp.marks()[0];
    if mp.marks().iter().all(|&m| m == first) {
        return Ok(0.5 * (lo + hi));
    }
    Ok(minimise_scalar(|h| lscv_score(mp, h), lo, hi, LSCV_GRID))
}
