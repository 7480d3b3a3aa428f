use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poisson::uniform_in;
use super::rng::{replicate_seed, rng_from_seed};
use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;

pub const DEFAULT_STRAUSS_ITERATIONS: usize = 200_000;
const PILOT_CHAINS: u64 = 16;
const PILOT_SEED: u64 = 0x5354_5241_5553;
const CALIBRATION_STEPS: usize = 30;
const CALIBRATION_REL_TOL: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraussParams {
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
    pub iterations: usize,
}

impl StraussParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param("beta_rate", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param(
                "gamma",
                format!("must lie in [0, 1] (inhibition only), got {}", self.gamma),
            ));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::param("r", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Points bucketed into square cells of side at least `r`.
struct CellIndex {
    w: ObservationWindow,
    r: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    points: Vec<Point>,
    cell_of: Vec<usize>,
}

impl CellIndex {
    fn new(w: ObservationWindow, r: f64) -> Self {
        let nx = ((w.width() / r).floor() as usize).clamp(1, 1024);
        let ny = ((w.height() / r).floor() as usize).clamp(1, 1024);
        Self {
            w,
            r,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            points: Vec::new(),
            cell_of: Vec::new(),
        }
    }

    fn cell(&self, u: &Point) -> (usize, usize) {
        self.w.grid_cell(self.nx, self.ny, u).expect("point lies in the window")
    }

    /// Points strictly closer than `r` to `u`, other than index `skip`.
    fn close_count(&self, u: &Point, skip: Option<usize>) -> usize {
        let (cx, cy) = self.cell(u);
        let r2 = self.r * self.r;
        let mut t = 0;
        for iy in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for ix in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                for &j in &self.cells[iy * self.nx + ix] {
                    if Some(j) != skip && self.points[j].dist2(u) < r2 {
                        t += 1;
                    }
                }
            }
        }
        t
    }

    fn insert(&mut self, u: Point) {
        let (ix, iy) = self.cell(&u);
        let c = iy * self.nx + ix;
        self.cells[c].push(self.points.len());
        self.cell_of.push(c);
        self.points.push(u);
    }

    fn remove(&mut self, i: usize) {
        let c = self.cell_of[i];
        let pos = self.cells[c].iter().position(|&j| j == i).expect("indexed point");
        self.cells[c].swap_remove(pos);
        let last = self.points.len() - 1;
        if i != last {
            let lc = self.cell_of[last];
            let lpos = self.cells[lc].iter().position(|&j| j == last).expect("indexed point");
            self.cells[lc][lpos] = i;
        }
        self.points.swap_remove(i);
        self.cell_of.swap_remove(i);
    }
}

/// Final state plus the close-pair count recorded every `trace_every` steps.
#[derive(Debug, Clone)]
pub struct StraussChain {
    pub pattern: PointPattern,
    pub close_pair_trace: Vec<usize>,
    pub accepted: usize,
}

/// Birth-death Metropolis-Hastings from the empty configuration.
pub fn run_strauss_chain(
    params: &StraussParams,
    w: &ObservationWindow,
    seed: u64,
    trace_every: Option<usize>,
) -> Result<StraussChain> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut idx = CellIndex::new(*w, params.r);
    let area = w.area();
    let (beta, gamma) = (params.beta, params.gamma);
    let mut pairs = 0usize;
    let mut accepted = 0;
    let mut trace = Vec::new();
    for step in 1..=params.iterations {
        let n = idx.points.len();
        if rng.random::<f64>() < 0.5 {
            let u = uniform_in(&mut rng, w);
            let t = idx.close_count(&u, None);
            let ratio = beta * gamma.powi(t as i32) * area / (n + 1) as f64;
            if rng.random::<f64>() < ratio {
                idx.insert(u);
                pairs += t;
                accepted += 1;
            }
        } else if n > 0 {
            let i = rng.random_range(0..n);
            let t = idx.close_count(&idx.points[i], Some(i));
            let ratio = n as f64 / (beta * area) / gamma.powi(t as i32);
            if rng.random::<f64>() < ratio {
                idx.remove(i);
                pairs -= t;
                accepted += 1;
            }
        }
        if let Some(k) = trace_every {
            if step % k == 0 {
                trace.push(pairs);
            }
        }
    }
    Ok(StraussChain {
        pattern: PointPattern::from_trusted(idx.points, *w),
        close_pair_trace: trace,
        accepted,
    })
}

/// Final state of a Strauss chain with density proportional to `beta^n gamma^s_R`.
pub fn sim_strauss(
    beta: f64,
    gamma: f64,
    r: f64,
    iterations: usize,
    w: &ObservationWindow,
    seed: u64,
) -> Result<PointPattern> {
    let params = StraussParams {
        beta,
        gamma,
        r,
        iterations,
    };
    Ok(run_strauss_chain(&params, w, seed, None)?.pattern)
}

fn pilot_mean(gamma: f64, r: f64, iterations: usize, w: &ObservationWindow, beta: f64) -> Result<f64> {
    let params = StraussParams {
        beta,
        gamma,
        r,
        iterations,
    };
    let counts = (0..PILOT_CHAINS)
        .into_par_iter()
        .map(|k| Ok(run_strauss_chain(&params, w, replicate_seed(PILOT_SEED, k), None)?.pattern.len()))
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.iter().sum::<usize>() as f64 / PILOT_CHAINS as f64)
}

/// `beta_rate` whose pilot chains average `target_n` points, by bisection on `log beta`
/// starting from the Poisson-saddlepoint guess `rho exp(rho (1 - gamma) pi r^2)`.
pub fn calibrate_strauss_beta(
    gamma: f64,
    r: f64,
    target_n: f64,
    iterations: usize,
    w: &ObservationWindow,
) -> Result<f64> {
    if !(target_n.is_finite() && target_n > 0.0) {
        return Err(Error::param("target_n", "must be positive"));
    }
    let rho = target_n / w.area();
    let guess = rho * (rho * (1.0 - gamma) * PI * r * r).min(50.0).exp();
    let mean = |b: f64| pilot_mean(gamma, r, iterations, w, b);
    let (mut lo, mut hi) = (guess.ln() - 1.0, guess.ln() + 1.0);
    while mean(lo.exp())? > target_n {
        lo -= 1.0;
    }
    let mut expansions = 0;
    while mean(hi.exp())? < target_n {
        hi += 1.0;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::param(
                "target_n",
                format!("{target_n} points are not reachable for gamma = {gamma}, r = {r}"),
            ));
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..CALIBRATION_STEPS {
        mid = 0.5 * (lo + hi);
        let m = mean(mid.exp())?;
        if (m - target_n).abs() <= CALIBRATION_REL_TOL * target_n {
            break;
        }
        if m < target_n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid.exp())
}
