use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localstats::{k_pois, local_k_all, LocalKFunction, RadiusGrid};
use crate::pattern::{MarkedPattern, PointPattern};

/// Exponents above this are clamped so marks stay finite.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyKind {
    /// `sup_r |K^i - K_Pois|`
    #[serde(alias = "uniform")]
    UniformMetric,
    /// `(int (K^i - K_Pois)^2 dr)^(1/2)`
    #[serde(alias = "l2")]
    L2Metric,
    /// `exp{ int (K^i - K_Pois)^2 dr }`
    ExpSquared,
    /// `exp{ int (K^i - K_Pois)^a / K_Pois dr }`
    ExpNormalized,
}

impl std::str::FromStr for DiscrepancyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform_metric" => Ok(Self::UniformMetric),
            "l2" | "l2_metric" => Ok(Self::L2Metric),
            "exp_squared" => Ok(Self::ExpSquared),
            "exp_normalized" => Ok(Self::ExpNormalized),
            other => Err(Error::param("discrepancy", format!("unknown kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancySpec {
    pub kind: DiscrepancyKind,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    /// Keep the sign of `K^i - K_Pois` inside the normalised integrand, so that
    /// inhibited points can score below one.
    #[serde(default)]
    pub signed: bool,
}

fn default_exponent() -> f64 {
    2.0
}

impl Default for DiscrepancySpec {
    fn default() -> Self {
        Self {
            kind: DiscrepancyKind::ExpNormalized,
            exponent: 2.0,
            signed: false,
        }
    }
}

impl DiscrepancySpec {
    pub fn new(kind: DiscrepancyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::param("exponent", "must be a positive real"));
        }
        Ok(())
    }
}

fn clamped_exp(x: f64) -> f64 {
    x.min(MAX_EXPONENT).exp()
}

/// Discrepancy between a local K-function and the Poisson benchmark `pi r^2`.
pub fn discrepancy(local: &LocalKFunction, spec: &DiscrepancySpec) -> Result<f64> {
    spec.validate()?;
    discrepancy_on(&local.grid, &local.k_values, spec)
}

pub(crate) fn discrepancy_on(g: &RadiusGrid, k: &[f64], spec: &DiscrepancySpec) -> Result<f64> {
    let r = g.values();
    let diff: Vec<f64> = r.iter().zip(k).map(|(&r, &k)| k - k_pois(r)).collect();
    let value = match spec.kind {
        DiscrepancyKind::UniformMetric => diff.iter().fold(0.0, |m, d| f64::max(m, d.abs())),
        DiscrepancyKind::L2Metric => {
            let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
            g.trapezoid(&sq).sqrt()
        }
        DiscrepancyKind::ExpSquared => {
            let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
            clamped_exp(g.trapezoid(&sq))
        }
        DiscrepancyKind::ExpNormalized => {
            if g.r0() <= 0.0 {
                return Err(Error::SingularIntegrand(g.r0()));
            }
            let a = spec.exponent;
            let integrand: Vec<f64> = diff
                .iter()
                .zip(r)
                .map(|(&d, &r)| {
                    let mag = if a == 2.0 { d * d } else { d.abs().powf(a) };
                    let num = if spec.signed { d.signum() * mag } else { mag };
                    num / k_pois(r)
                })
                .collect();
            clamped_exp(g.trapezoid(&integrand))
        }
    };
    Ok(value)
}

/// Interaction scores at the data points: mark `i` is the discrepancy of `K^i`.
pub fn phi_star_at_points(
    p: &PointPattern,
    g: &RadiusGrid,
    spec: &DiscrepancySpec,
) -> Result<MarkedPattern> {
    spec.validate()?;
    let locals = local_k_all(p, g)?;
    let marks = locals
        .par_iter()
        .map(|l| discrepancy_on(&l.grid, &l.k_values, spec))
        .collect::<Result<Vec<_>>>()?;
    MarkedPattern::new(p.clone(), marks)
}
