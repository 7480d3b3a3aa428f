use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lgcp::{LgcpSampler, DEFAULT_LGCP_GRID};
use super::poisson::{sim_poisson_homog, sim_poisson_inhom};
use super::rng::replicate_seed;
use super::strauss::{calibrate_strauss_beta, sim_strauss, StraussParams, DEFAULT_STRAUSS_ITERATIONS};
use super::thomas::sim_thomas;
use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;
use crate::raster::{RasterDims, RasterSurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PoissonHomog,
    PoissonLinear,
    PoissonModulated,
    Lgcp,
    Thomas,
    Strauss,
}

impl Family {
    /// Accepted parameter names, required ones first.
    fn schema(self) -> &'static [&'static str] {
        match self {
            Family::PoissonHomog => &["rho"],
            Family::PoissonLinear => &["alpha", "base"],
            Family::PoissonModulated => &["alpha", "beta"],
            Family::Lgcp => &["sigma2", "beta", "mu", "target_n", "quad_x", "quad_y", "grid"],
            Family::Thomas => &["kappa", "sigma", "mu0", "mu_x", "mu_c"],
            Family::Strauss => &["gamma", "r", "beta_rate", "target_n", "iterations"],
        }
    }
}

fn default_seed() -> u64 {
    1
}

/// A simulation scenario: family, named parameters, window and base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default = "ObservationWindow::unit_square")]
    pub window: ObservationWindow,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(family: Family, parameters: &[(&str, f64)], seed: u64) -> Self {
        Self {
            family,
            parameters: parameters.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            window: ObservationWindow::unit_square(),
            seed,
        }
    }
}

#[derive(Debug, Clone)]
struct LgcpModel {
    sampler: LgcpSampler,
    sigma2: f64,
    mu: f64,
    quad_x: f64,
    quad_y: f64,
}

impl LgcpModel {
    fn log_mean(&self, u: &Point) -> f64 {
        let (dx, dy) = (u.x - 0.5, u.y - 0.5);
        self.mu + self.quad_x * dx * dx + self.quad_y * dy * dy
    }
}

#[derive(Debug, Clone)]
enum Model {
    Homog { rho: f64 },
    Linear { alpha: f64, base: f64 },
    Modulated { alpha: f64, beta: f64 },
    Lgcp(Box<LgcpModel>),
    Thomas { kappa: f64, sigma: f64, mu0: f64, mu_x: f64, mu_c: f64 },
    Strauss(StraussParams),
}

/// A scenario with every parameter resolved (including calibrated ones), ready to sample.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    model: Model,
    resolved: BTreeMap<String, f64>,
}

struct Params<'a> {
    family: Family,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn opt(&self, k: &str) -> Option<f64> {
        self.map.get(k).copied()
    }

    fn req(&self, k: &str) -> Result<f64> {
        self.opt(k).ok_or_else(|| {
            Error::Config(format!("scenario `{:?}` requires parameter `{k}`", self.family))
        })
    }

    fn or(&self, k: &str, default: f64) -> f64 {
        self.opt(k).unwrap_or(default)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn whole(name: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::param(name, format!("must be a positive integer, got {v}")))
    }
}

impl Scenario {
    /// Validates the parameters against the family schema and runs any calibration.
    pub fn resolve(spec: &ScenarioSpec) -> Result<Self> {
        let schema = spec.family.schema();
        if let Some(bad) = spec.parameters.keys().find(|k| !schema.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown parameter `{bad}` for family {:?} (accepted: {})",
                spec.family,
                schema.join(", ")
            )));
        }
        for (k, v) in &spec.parameters {
            if !v.is_finite() {
                return Err(Error::param(k.clone(), "must be finite"));
            }
        }
        let p = Params {
            family: spec.family,
            map: &spec.parameters,
        };
        let w = spec.window;
        let mut resolved = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            resolved.insert(k.to_string(), v);
        };
        let model = match spec.family {
            Family::PoissonHomog => {
                let rho = positive("rho", p.req("rho")?)?;
                put("rho", rho);
                Model::Homog { rho }
            }
            Family::PoissonLinear => {
                let (alpha, base) = (p.req("alpha")?, p.or("base", 10.0));
                if base + alpha * w.x_min() < 0.0 || base + alpha * w.x_max() < 0.0 {
                    return Err(Error::param("alpha", "intensity base + alpha x is negative on the window"));
                }
                put("alpha", alpha);
                put("base", base);
                Model::Linear { alpha, base }
            }
            Family::PoissonModulated => {
                let (alpha, beta) = (p.req("alpha")?, p.or("beta", 100.0));
                if alpha < beta.abs() {
                    return Err(Error::param("alpha", "must be at least |beta| so the intensity stays non-negative"));
                }
                put("alpha", alpha);
                put("beta", beta);
                Model::Modulated { alpha, beta }
            }
            Family::Lgcp => {
                let sigma2 = positive("sigma2", p.req("sigma2")?)?;
                let beta = positive("beta", p.req("beta")?)?;
                let quad_x = p.or("quad_x", 0.0);
                let quad_y = p.or("quad_y", 0.0);
                let grid = whole("grid", p.or("grid", DEFAULT_LGCP_GRID as f64))?;
                let dims = RasterDims::square(grid);
                let shape = |u: &Point| {
                    let (dx, dy) = (u.x - 0.5, u.y - 0.5);
                    quad_x * dx * dx + quad_y * dy * dy
                };
                let mu = match (p.opt("mu"), p.opt("target_n")) {
                    (Some(mu), None) => mu,
                    (None, Some(target)) => {
                        let target = positive("target_n", target)?;
                        let unit = LgcpSampler::new(&shape, sigma2, beta, dims, w)?;
                        target.ln() - unit.expected_count().ln()
                    }
                    _ => {
                        return Err(Error::Config(
                            "lgcp scenario needs exactly one of `mu`, `target_n`".into(),
                        ))
                    }
                };
                let log_mean = |u: &Point| mu + shape(u);
                let sampler = LgcpSampler::new(&log_mean, sigma2, beta, dims, w)?;
                for (k, v) in [
                    ("sigma2", sigma2),
                    ("beta", beta),
                    ("mu", mu),
                    ("quad_x", quad_x),
                    ("quad_y", quad_y),
                    ("grid", grid as f64),
                ] {
                    put(k, v);
                }
                put("expected_n", sampler.expected_count());
                Model::Lgcp(Box::new(LgcpModel {
                    sampler,
                    sigma2,
                    mu,
                    quad_x,
                    quad_y,
                }))
            }
            Family::Thomas => {
                let kappa = positive("kappa", p.req("kappa")?)?;
                let sigma = positive("sigma", p.or("sigma", 0.2))?;
                let mu0 = p.or("mu0", 5.0);
                if mu0 < 0.0 {
                    return Err(Error::param("mu0", "must be non-negative"));
                }
                let (mu_x, mu_c) = (p.or("mu_x", 2.0), p.or("mu_c", -1.0));
                for (k, v) in [("kappa", kappa), ("sigma", sigma), ("mu0", mu0), ("mu_x", mu_x), ("mu_c", mu_c)] {
                    put(k, v);
                }
                Model::Thomas {
                    kappa,
                    sigma,
                    mu0,
                    mu_x,
                    mu_c,
                }
            }
            Family::Strauss => {
                let gamma = p.req("gamma")?;
                let r = positive("r", p.or("r", 0.05))?;
                let iterations = whole("iterations", p.or("iterations", DEFAULT_STRAUSS_ITERATIONS as f64))?;
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::param("gamma", "must lie in [0, 1]"));
                }
                let beta = match (p.opt("beta_rate"), p.opt("target_n")) {
                    (Some(b), None) => positive("beta_rate", b)?,
                    (None, Some(t)) => calibrate_strauss_beta(gamma, r, t, iterations, &w)?,
                    _ => {
                        return Err(Error::Config(
                            "strauss scenario needs exactly one of `beta_rate`, `target_n`".into(),
                        ))
                    }
                };
                for (k, v) in [("gamma", gamma), ("r", r), ("beta_rate", beta), ("iterations", iterations as f64)] {
                    put(k, v);
                }
                let params = StraussParams {
                    beta,
                    gamma,
                    r,
                    iterations,
                };
                params.validate()?;
                Model::Strauss(params)
            }
        };
        Ok(Self {
            spec: spec.clone(),
            model,
            resolved,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.spec.window
    }

    /// Parameters after defaults and calibration.
    pub fn resolved_parameters(&self) -> &BTreeMap<String, f64> {
        &self.resolved
    }

    pub fn sample(&self, seed: u64) -> Result<PointPattern> {
        let w = &self.spec.window;
        match &self.model {
            Model::Homog { rho } => sim_poisson_homog(*rho, w, seed),
            Model::Linear { alpha, base } => {
                let (a, b) = (*alpha, *base);
                let bound = (b + a * w.x_min()).max(b + a * w.x_max());
                sim_poisson_inhom(&move |u: &Point| (b + a * u.x).max(0.0), bound, w, seed)
            }
            Model::Modulated { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                sim_poisson_inhom(&move |u: &Point| a + b * (10.0 * u.x).cos(), a + b.abs(), w, seed)
            }
            Model::Lgcp(m) => Ok(m.sampler.sample(seed)),
            Model::Thomas {
                kappa,
                sigma,
                mu0,
                mu_x,
                mu_c,
            } => {
                let (m0, mx, mc) = (*mu0, *mu_x, *mu_c);
                sim_thomas(*kappa, *sigma, &move |u: &Point| m0 * (mx * u.x + mc).exp(), w, seed)
            }
            Model::Strauss(s) => sim_strauss(s.beta, s.gamma, s.r, s.iterations, w, seed),
        }
    }

    /// Replicate `index` of this scenario, seeded from the scenario seed.
    pub fn replicate(&self, index: u64) -> Result<PointPattern> {
        self.sample(replicate_seed(self.spec.seed, index))
    }

    pub fn has_known_intensity(&self) -> bool {
        !matches!(self.model, Model::Thomas { .. } | Model::Strauss(_))
    }

    /// True intensity on a raster; LGCP uses `exp(mu(u) + sigma2 / 2)`.
    pub fn truth(&self, dims: RasterDims) -> Result<RasterSurface> {
        let w = self.spec.window;
        match &self.model {
            Model::Homog { rho } => RasterSurface::constant(w, dims, *rho),
            Model::Linear { alpha, base } => RasterSurface::from_fn(w, dims, |u| base + alpha * u.x),
            Model::Modulated { alpha, beta } => {
                RasterSurface::from_fn(w, dims, |u| alpha + beta * (10.0 * u.x).cos())
            }
            Model::Lgcp(m) => RasterSurface::from_fn(w, dims, |u| (m.log_mean(&u) + 0.5 * m.sigma2).exp()),
            Model::Thomas { .. } | Model::Strauss(_) => Err(Error::Config(format!(
                "family {:?} has no closed-form intensity; use the chi2 metric",
                self.spec.family
            ))),
        }
    }

    /// Covariates of the fitted log-linear model for this family.
    pub fn default_covariates(&self) -> Vec<String> {
        let names: &[&str] = match &self.model {
            Model::Homog { .. } | Model::Strauss(_) => &[],
            Model::Linear { .. } | Model::Modulated { .. } | Model::Thomas { .. } => &["x"],
            Model::Lgcp(m) if m.quad_x == 0.0 && m.quad_y == 0.0 => &[],
            Model::Lgcp(_) => &["x", "y", "x2", "y2"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

/// Resolves the scenario and draws one pattern with its seed.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<PointPattern> {
    Scenario::resolve(spec)?.sample(spec.seed)
}
