use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::interaction::{interpolate_at, InterpolationSpec};
use crate::pattern::MarkedPattern;
use crate::raster::RasterSurface;

pub const INTERCEPT: &str = "(Intercept)";

/// Coordinate functions evaluated exactly at any location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    X,
    Y,
    X2,
    Y2,
}

impl Coordinate {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "x" => Ok(Coordinate::X),
            "y" => Ok(Coordinate::Y),
            "x2" => Ok(Coordinate::X2),
            "y2" => Ok(Coordinate::Y2),
            other => Err(Error::Config(format!(
                "unknown built-in covariate `{other}` (expected x, y, x2, y2)"
            ))),
        }
    }

    pub fn eval(self, u: &Point) -> f64 {
        match self {
            Coordinate::X => u.x,
            Coordinate::Y => u.y,
            Coordinate::X2 => u.x * u.x,
            Coordinate::Y2 => u.y * u.y,
        }
    }
}

/// A covariate `z_j(u)`: a raster looked up cell-wise, or an exact coordinate function.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariate {
    Surface(RasterSurface),
    Coordinate(Coordinate),
}

impl Covariate {
    pub fn at(&self, u: &Point) -> Result<f64> {
        match self {
            Covariate::Surface(s) => s.at(u),
            Covariate::Coordinate(c) => Ok(c.eval(u)),
        }
    }
}

impl From<RasterSurface> for Covariate {
    fn from(s: RasterSurface) -> Self {
        Covariate::Surface(s)
    }
}

impl From<Coordinate> for Covariate {
    fn from(c: Coordinate) -> Self {
        Covariate::Coordinate(c)
    }
}

/// Named covariates.
#[derive(Debug, Clone, Default)]
pub struct Covariates {
    entries: BTreeMap<String, Covariate>,
}

impl Covariates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, c: impl Into<Covariate>) {
        self.entries.insert(name.into(), c.into());
    }

    pub fn with(mut self, name: impl Into<String>, c: impl Into<Covariate>) -> Self {
        self.insert(name, c);
        self
    }

    pub fn get(&self, name: &str) -> Result<&Covariate> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Config(format!("no covariate named `{name}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Coordinate covariates: `x`, `y`, `x2` (= x^2), `y2` (= y^2).
    pub fn builtin(names: &[String]) -> Result<Self> {
        let mut out = Self::new();
        for name in names {
            out.insert(name.clone(), Coordinate::parse(name)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    None,
    Indicator,
    Surface,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Offset {
    None,
    /// `phi*` at the data points, one at every other location.
    Indicator { point_offsets: Vec<f64> },
    /// Multiplicative weight surface `B(u)`.
    Surface(RasterSurface),
    /// `B(u)` interpolated from point marks, evaluated exactly wherever needed.
    Field {
        marks: MarkedPattern,
        spec: InterpolationSpec,
    },
}

/// Log-linear intensity `exp(theta . (1, z(u)))` times an optional fixed weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub covariate_names: Vec<String>,
    pub offset: Offset,
}

impl Offset {
    /// `B(u)` before flooring; one when there is no surface-type offset.
    pub fn weight_at(&self, u: &Point) -> Result<f64> {
        match self {
            Offset::None | Offset::Indicator { .. } => Ok(1.0),
            Offset::Surface(s) => s.at(u),
            Offset::Field { marks, spec } => interpolate_at(marks, spec, u),
        }
    }
}

impl ModelSpec {
    pub fn new(covariate_names: Vec<String>) -> Self {
        Self {
            covariate_names,
            offset: Offset::None,
        }
    }

    pub fn homogeneous() -> Self {
        Self::new(Vec::new())
    }

    pub fn with_indicator(mut self, point_offsets: Vec<f64>) -> Result<Self> {
        if !point_offsets.iter().all(|&v| v.is_finite() && v > 0.0) {
            return Err(Error::param("point_offsets", "all values must be positive and finite"));
        }
        self.offset = Offset::Indicator { point_offsets };
        Ok(self)
    }

    pub fn with_surface(mut self, s: RasterSurface) -> Result<Self> {
        if s.values().iter().any(|&v| v <= 0.0) {
            return Err(Error::param("offset_surface", "values must be strictly positive"));
        }
        self.offset = Offset::Surface(s);
        Ok(self)
    }

    /// Offset interpolated from `marks`; a kernel bandwidth left unset is cross-validated here.
    pub fn with_field(mut self, marks: MarkedPattern, spec: &InterpolationSpec) -> Result<Self> {
        if !marks.marks().iter().all(|&v| v.is_finite() && v >= 0.0) {
            return Err(Error::param("marks", "all values must be finite and non-negative"));
        }
        if marks.is_empty() {
            return Err(Error::NoData("cannot interpolate marks of an empty pattern"));
        }
        let spec = spec.resolved(&marks)?;
        self.offset = Offset::Field { marks, spec };
        Ok(self)
    }

    pub fn offset_mode(&self) -> OffsetMode {
        match self.offset {
            Offset::None => OffsetMode::None,
            Offset::Indicator { .. } => OffsetMode::Indicator,
            Offset::Surface(_) | Offset::Field { .. } => OffsetMode::Surface,
        }
    }

    /// Intercept followed by the covariate names.
    pub fn term_names(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(self.covariate_names.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub term_names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub model: ModelSpec,
    pub window: ObservationWindow,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after each accepted Newton step, starting value first.
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.theta.len())
            .map(|k| self.covariance[k][k].max(0.0).sqrt())
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.term_names
            .iter()
            .position(|t| t == name)
            .map(|k| self.theta[k])
    }

    pub fn summary(&self) -> FitSummary {
        let se = self.std_errors();
        FitSummary {
            theta: self
                .term_names
                .iter()
                .cloned()
                .zip(self.theta.iter().copied())
                .collect(),
            std_errors: self.term_names.iter().cloned().zip(se).collect(),
            log_likelihood: self.log_likelihood,
            aic: self.aic,
            converged: self.converged,
            iterations: self.iterations,
            model: ModelEcho {
                covariate_names: self.model.covariate_names.clone(),
                offset_mode: self.model.offset_mode(),
            },
        }
    }
}

/// AIC from a log-likelihood and parameter count.
pub fn aic(k: usize, log_likelihood: f64) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEcho {
    pub covariate_names: Vec<String>,
    pub offset_mode: OffsetMode,
}

/// Serialisable view of a fit (named coefficients; BTreeMap keeps key order stable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub theta: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub model: ModelEcho,
}
