//! Local and global K-functions with translation edge correction.
//!
//! The local function of point `x_i` is
//!
//! ```text
//! K^i(r) = |W| / (n - 1) * sum_{j != i} w(x_i, x_j) 1{ |x_j - x_i| <= r }
//! w(x_i, x_j) = |W| / |W ∩ (W + x_j - x_i)|
//! ```
//!
//! which is the stationary plug-in `rho~ = n/|W|` version scaled so that the
//! average over points is the usual global estimator; under complete spatial
//! randomness both are unbiased for `pi r^2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;

pub const DEFAULT_RADII: usize = 100;

/// Strictly increasing radii `r0 < ... < r_max` with `r0 > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RadiusGrid {
    r_values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for RadiusGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        RadiusGrid::new(v)
    }
}

impl From<RadiusGrid> for Vec<f64> {
    fn from(g: RadiusGrid) -> Self {
        g.r_values
    }
}

impl RadiusGrid {
    pub fn new(r_values: Vec<f64>) -> Result<Self> {
        if r_values.len() < 2 {
            return Err(Error::InvalidGrid("need at least two radii".into()));
        }
        if !r_values.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidGrid("radii must be finite".into()));
        }
        if r_values[0] <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first radius must be positive, got {}",
                r_values[0]
            )));
        }
        if r_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("radii must be strictly increasing".into()));
        }
        Ok(Self { r_values })
    }

    /// `count` equally spaced radii from `r0` to `r_max` inclusive.
    pub fn linspace(r0: f64, r_max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid("need at least two radii".into()));
        }
        let step = (r_max - r0) / (count - 1) as f64;
        let mut r: Vec<f64> = (0..count).map(|k| r0 + step * k as f64).collect();
        r[count - 1] = r_max;
        Self::new(r)
    }

    /// `count` radii with `r_max = r_max_opt.unwrap_or(shorter side / 4)` and `r0 = r_max / 100`.
    pub fn for_window(w: &ObservationWindow, r_max: Option<f64>, count: usize) -> Result<Self> {
        let r_max = r_max.unwrap_or(w.shorter_side() / 4.0);
        Self::linspace(r_max / 100.0, r_max, count)
    }

    pub fn default_for(w: &ObservationWindow) -> Self {
        Self::for_window(w, None, DEFAULT_RADII).expect("window sides are positive")
    }

    pub fn values(&self) -> &[f64] {
        &self.r_values
    }

    pub fn len(&self) -> usize {
        self.r_values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r0(&self) -> f64 {
        self.r_values[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r_values[self.r_values.len() - 1]
    }

    /// Trapezoid rule for samples `f` taken on the grid.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.r_values.len());
        self.r_values
            .windows(2)
            .zip(f.windows(2))
            .map(|(r, v)| 0.5 * (r[1] - r[0]) * (v[0] + v[1]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalKFunction {
    pub owner_index: usize,
    pub grid: RadiusGrid,
    pub k_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalKFunction {
    pub grid: RadiusGrid,
    pub k_values: Vec<f64>,
}

/// `K_Pois(r) = pi r^2`.
pub fn k_pois(r: f64) -> f64 {
    PI * r * r
}

/// Translation edge-correction weight, `None` when the shifted window misses `W`.
pub fn translation_weight(w: &ObservationWindow, xi: &Point, xj: &Point) -> Option<f64> {
    let ox = w.width() - (xj.x - xi.x).abs();
    let oy = w.height() - (xj.y - xi.y).abs();
    if ox <= 0.0 || oy <= 0.0 {
        None
    } else {
        Some(w.area() / (ox * oy))
    }
}

fn check_points(p: &PointPattern) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    Ok(())
}

fn local_k_unchecked(p: &PointPattern, i: usize, g: &RadiusGrid) -> LocalKFunction {
    let pts = p.points();
    let w = p.window();
    let r = g.values();
    let r_max = g.r_max();
    let xi = pts[i];

    let mut increments = vec![0.0; r.len()];
    for (j, xj) in pts.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = xi.dist(xj);
        if d > r_max {
            continue;
        }
        let Some(wt) = translation_weight(w, &xi, xj) else {
            continue;
        };
        let k = r.partition_point(|&rk| rk < d);
        increments[k] += wt;
    }

    let scale = w.area() / (pts.len() - 1) as f64;
    let mut acc = 0.0;
    let k_values = increments
        .into_iter()
        .map(|inc| {
            acc += inc;
            acc * scale
        })
        .collect();

    LocalKFunction {
        owner_index: i,
        grid: g.clone(),
        k_values,
    }
}

pub fn local_k(p: &PointPattern, i: usize, g: &RadiusGrid) -> Result<LocalKFunction> {
    check_points(p)?;
    if i >= p.len() {
        return Err(Error::param(
            "i",
            format!("index {i} out of range for {} points", p.len()),
        ));
    }
    Ok(local_k_unchecked(p, i, g))
}

pub fn local_k_all(p: &PointPattern, g: &RadiusGrid) -> Result<Vec<LocalKFunction>> {
    check_points(p)?;
    Ok((0..p.len())
        .into_par_iter()
        .map(|i| local_k_unchecked(p, i, g))
        .collect())
}

/// Pointwise mean of local functions sharing a grid.
pub fn global_k(locals: &[LocalKFunction]) -> Result<GlobalKFunction> {
    let first = locals
        .first()
        .ok_or(Error::NoData("no local K-functions to average"))?;
    let mut sum = vec![0.0; first.grid.len()];
    for l in locals {
        if l.grid != first.grid {
            return Err(Error::GridMismatch("local K-functions use different radius grids"));
        }
        for (s, v) in sum.iter_mut().zip(&l.k_values) {
            *s += v;
        }
    }
    let n = locals.len() as f64;
    Ok(GlobalKFunction {
        grid: first.grid.clone(),
        k_values: sum.into_iter().map(|s| s / n).collect(),
    })
}
