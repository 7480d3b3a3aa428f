use std::collections::BTreeMap;
use std::path::Path;

use lisafit::fit::EstimationSettings;
use lisafit::interaction::{DiscrepancyKind, DiscrepancySpec};
use lisafit::RasterDims;
use serde::{Deserialize, Serialize};

use crate::args::{DiscrepancyArgs, EstimationArgs, Format, RadiusArgs};
use crate::CliError;

/// Defaults read from `--config`; command line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub radii: Option<usize>,
    pub r_max: Option<f64>,
    pub discrepancy: Option<String>,
    pub exponent: Option<f64>,
    pub signed: Option<bool>,
    pub idw_power: Option<f64>,
    pub bandwidth: Option<f64>,
    pub dummy_grid: Option<usize>,
    pub raster: Option<usize>,
    pub offset: Option<String>,
    pub covariates: Option<Vec<String>>,
    pub replicates: Option<usize>,
    pub metric: Option<String>,
    pub methods: Option<Vec<String>>,
    pub quadrats: Option<String>,
    pub kernel_bandwidth: Option<f64>,
    pub residual_bandwidth: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

pub const THREADS_ENV: &str = "LISAFIT_THREADS";

/// Flag, then config file, then `$LISAFIT_THREADS`.
pub fn thread_count(flag: Option<usize>, file: &FileConfig) -> Result<Option<usize>, CliError> {
    if let Some(t) = flag.or(file.threads) {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}: `{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

pub fn parse_quadrats(s: &str) -> Result<[usize; 2], CliError> {
    let bad = || CliError::Config(format!("quadrats: expected ROWSxCOLS, got `{s}`"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let rows = r.trim().parse().map_err(|_| bad())?;
    let cols = c.trim().parse().map_err(|_| bad())?;
    Ok([rows, cols])
}

pub fn discrepancy(a: &DiscrepancyArgs, f: &FileConfig) -> Result<DiscrepancySpec, CliError> {
    let mut spec = DiscrepancySpec::default();
    if let Some(kind) = a.discrepancy.as_ref().or(f.discrepancy.as_ref()) {
        spec.kind = kind.parse::<DiscrepancyKind>()?;
    }
    if let Some(e) = a.exponent.or(f.exponent) {
        spec.exponent = e;
    }
    spec.signed = a.signed || f.signed.unwrap_or(false);
    spec.validate()?;
    Ok(spec)
}

pub fn radius(a: &RadiusArgs, f: &FileConfig, s: &mut EstimationSettings) {
    if let Some(n) = a.radii.or(f.radii) {
        s.radii = n;
    }
    s.r_max = a.r_max.or(f.r_max);
}

pub fn estimation(a: &EstimationArgs, f: &FileConfig) -> Result<EstimationSettings, CliError> {
    let mut s = EstimationSettings::default();
    radius(&a.radius, f, &mut s);
    s.discrepancy = discrepancy(&a.discrepancy, f)?;
    if let Some(p) = a.idw_power.or(f.idw_power) {
        s.idw_power = p;
    }
    s.kernel_bandwidth = a.bandwidth.or(f.bandwidth);
    s.dummy_grid = a.dummy_grid.or(f.dummy_grid);
    if let Some(n) = a.raster.or(f.raster) {
        if n == 0 {
            return Err(CliError::Config("raster: must be at least 1".into()));
        }
        s.raster = RasterDims::square(n);
    }
    Ok(s)
}

/// Effective configuration echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
    pub paths: BTreeMap<&'static str, String>,
    pub options: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    pub fn path(mut self, key: &'static str, p: &Path) -> Self {
        self.paths.insert(key, p.display().to_string());
        self
    }

    pub fn option(mut self, key: &str, v: impl Serialize) -> Self {
        self.options.insert(
            key.to_string(),
            serde_json::to_value(v).expect("config values serialise"),
        );
        self
    }
}
