use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measures::{mise, pearson_chi2, QuadratPartition, DEFAULT_QUADRATS};
use crate::error::{Error, Result};
use crate::fit::{fit_with_method, point_marks, Covariates, EstimationSettings, OffsetMethod};
use crate::raster::RasterSurface;
use crate::simulate::{replicate_seed, Scenario, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mise,
    Chi2,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mise" => Ok(Metric::Mise),
            "chi2" => Ok(Metric::Chi2),
            other => Err(Error::param("metric", format!("unknown metric `{other}` (mise, chi2)"))),
        }
    }
}

fn default_quadrats() -> [usize; 2] {
    [DEFAULT_QUADRATS, DEFAULT_QUADRATS]
}

fn default_methods() -> Vec<OffsetMethod> {
    OffsetMethod::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<OffsetMethod>,
    pub metric: Metric,
    /// `[rows, cols]` of the chi-square partition.
    #[serde(default = "default_quadrats")]
    pub quadrats: [usize; 2],
    /// Covariates of the fitted model; `None` uses the scenario family default.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    #[serde(default)]
    pub settings: EstimationSettings,
}

impl StudyConfig {
    pub fn new(replicates: usize, metric: Metric) -> Self {
        Self {
            replicates,
            methods: default_methods(),
            metric,
            quadrats: default_quadrats(),
            covariates: None,
            settings: EstimationSettings::default(),
        }
    }
}

/// One method's outcome on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok { value: f64 },
    NotConverged,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub n_points: usize,
    pub outcomes: BTreeMap<OffsetMethod, Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: OffsetMethod,
    pub mean: f64,
    pub std_error: f64,
    pub used: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: ScenarioSpec,
    pub resolved_parameters: BTreeMap<String, f64>,
    pub metric: Metric,
    pub replicates: usize,
    pub covariates: Vec<String>,
    pub config: StudyConfig,
    pub methods: Vec<MethodSummary>,
    pub records: Vec<ReplicateRecord>,
}

impl StudyReport {
    pub fn summary(&self, method: OffsetMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// One row per method: `method,mean,std_error,used,excluded`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method", "metric", "mean", "std_error", "used", "excluded"])?;
        let metric = match self.metric {
            Metric::Mise => "mise",
            Metric::Chi2 => "chi2",
        };
        for m in &self.methods {
            out.write_record([
                m.method.label().to_string(),
                metric.to_string(),
                format!("{}", m.mean),
                format!("{}", m.std_error),
                m.used.to_string(),
                m.excluded.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mean and standard error (`sd / sqrt(n)`, zero below two values).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn score(
    scenario: &Scenario,
    config: &StudyConfig,
    covariates: &[String],
    cov: &Covariates,
    truth: Option<&RasterSurface>,
    partition: &QuadratPartition,
    index: usize,
) -> Result<ReplicateRecord> {
    let seed = replicate_seed(scenario.spec().seed, index as u64);
    let p = scenario.sample(seed)?;
    let s = &config.settings;
    let marks = if config.methods.iter().any(|m| m.needs_marks()) {
        Some(point_marks(&p, s))
    } else {
        None
    };
    let mut outcomes = BTreeMap::new();
    for &method in &config.methods {
        let marks = match &marks {
            Some(Ok(m)) => Some(m),
            Some(Err(e)) if method.needs_marks() => {
                outcomes.insert(method, Outcome::Failed { error: e.to_string() });
                continue;
            }
            _ => None,
        };
        let outcome = match fit_with_method(&p, cov, covariates, method, marks, s) {
            Ok(mf) if !mf.fit.converged => Outcome::NotConverged,
            Ok(mf) => {
                let v = match config.metric {
                    Metric::Mise => mise(std::slice::from_ref(&mf.intensity), truth.expect("truth")),
                    Metric::Chi2 => pearson_chi2(&p, &mf.intensity, partition),
                };
                match v {
                    Ok(value) => Outcome::Ok { value },
                    Err(e) => Outcome::Failed { error: e.to_string() },
                }
            }
            Err(e) => Outcome::Failed { error: e.to_string() },
        };
        outcomes.insert(method, outcome);
    }
    Ok(ReplicateRecord {
        index,
        seed,
        n_points: p.len(),
        outcomes,
    })
}

/// Paired replication study: every method sees the same simulated pattern per replicate.
pub fn run_study_resolved(scenario: &Scenario, config: &StudyConfig) -> Result<StudyReport> {
    if config.replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    if config.methods.is_empty() {
        return Err(Error::param("methods", "at least one method is required"));
    }
    let w = *scenario.window();
    let truth = match config.metric {
        Metric::Mise => Some(scenario.truth(config.settings.raster)?),
        Metric::Chi2 => None,
    };
    let partition = QuadratPartition::new(w, config.quadrats[0], config.quadrats[1])?;
    let covariates = config
        .covariates
        .clone()
        .unwrap_or_else(|| scenario.default_covariates());
    let cov = Covariates::builtin(&covariates)?;

    let records = (0..config.replicates)
        .into_par_iter()
        .map(|i| score(scenario, config, &covariates, &cov, truth.as_ref(), &partition, i))
        .collect::<Result<Vec<_>>>()?;

    let methods = config
        .methods
        .iter()
        .map(|&method| {
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| match r.outcomes.get(&method) {
                    Some(Outcome::Ok { value }) => Some(*value),
                    _ => None,
                })
                .collect();
            let (mean, std_error) = mean_and_se(&values);
            MethodSummary {
                method,
                mean,
                std_error,
                used: values.len(),
                excluded: records.len() - values.len(),
            }
        })
        .collect();

    Ok(StudyReport {
        scenario: scenario.spec().clone(),
        resolved_parameters: scenario.resolved_parameters().clone(),
        metric: config.metric,
        replicates: config.replicates,
        covariates,
        config: config.clone(),
        methods,
        records,
    })
}

pub fn run_study(spec: &ScenarioSpec, config: &StudyConfig) -> Result<StudyReport> {
    run_study_resolved(&Scenario::resolve(spec)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterDims;
    use crate::simulate::Family;

    fn small(metric: Metric, methods: Vec<OffsetMethod>, reps: usize) -> StudyConfig {
        StudyConfig {
            methods,
            settings: EstimationSettings {
                raster: RasterDims::square(32),
                dummy_grid: Some(16),
                radii: 20,
                ..EstimationSettings::default()
            },
            ..StudyConfig::new(reps, metric)
        }
    }

    #[test]
    fn single_replicate_mean_is_the_value() {
        let spec = ScenarioSpec::new(Family::PoissonHomog, &[("rho", 60.0)], 5);
        let r = run_study(&spec, &small(Metric::Mise, vec![OffsetMethod::None], 1)).unwrap();
        let m = r.summary(OffsetMethod::None).unwrap();
        match &r.records[0].outcomes[&OffsetMethod::None] {
            Outcome::Ok { value } => assert_eq!(m.mean, *value),
            other => panic!("{other:?}"),
        }
        assert_eq!(m.std_error, 0.0);
    }

    #[test]
    fn rerun_is_identical() {
        let spec = ScenarioSpec::new(Family::Thomas, &[("kappa", 10.0)], 9);
        let c = small(Metric::Chi2, OffsetMethod::ALL.to_vec(), 3);
        let a = run_study(&spec, &c).unwrap();
        let b = run_study(&spec, &c).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn mise_rejected_without_truth() {
        let spec = ScenarioSpec::new(Family::Thomas, &[("kappa", 10.0)], 9);
        assert!(matches!(
            run_study(&spec, &small(Metric::Mise, vec![OffsetMethod::None], 2)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn se_of_known_values() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
