use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "lisafit", version, about = "Interaction-adjusted intensity estimation for spatial point patterns")]
pub struct Cli {
    /// Base random seed (overrides the scenario and config seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to $LISAFIT_THREADS, then the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with default values for any tunable.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw replicate patterns from a scenario.
    Simulate(SimulateArgs),
    /// Local and global K-functions of a pattern.
    Localk(LocalkArgs),
    /// Interaction scores at the data points.
    Phistar(PhistarArgs),
    /// Fit a log-linear Poisson model with an optional interaction offset.
    Fit(FitArgs),
    /// Goodness of fit of a fitted surface.
    Gof(GofArgs),
    /// Paired replication study over offset methods.
    Study(StudyArgs),
    /// Four-model comparison with figures (defaults to the bundled Redwood fixture).
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PatternArgs {
    /// Pattern CSV with header `x,y`.
    #[arg(long)]
    pub pattern: PathBuf,
    /// Window JSON; defaults to the sidecar `<pattern>.window.json`.
    #[arg(long)]
    pub window: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RadiusArgs {
    /// Number of radii in the K-function grid.
    #[arg(long)]
    pub radii: Option<usize>,
    /// Largest radius (default: a quarter of the shorter window side).
    #[arg(long)]
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DiscrepancyArgs {
    /// exp_normalized, exp_squared, uniform or l2.
    #[arg(long)]
    pub discrepancy: Option<String>,
    /// Exponent of the normalised discrepancy.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Keep the sign of the K-function excess.
    #[arg(long)]
    pub signed: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimationArgs {
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[command(flatten)]
    pub discrepancy: DiscrepancyArgs,
    /// Inverse-distance weighting power.
    #[arg(long)]
    pub idw_power: Option<f64>,
    /// Nadaraya-Watson bandwidth for the kernel offset (default: cross-validated).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Dummy points per side of the quadrature grid.
    #[arg(long)]
    pub dummy_grid: Option<usize>,
    /// Raster cells per side for surfaces.
    #[arg(long)]
    pub raster: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LocalkArgs {
    #[command(flatten)]
    pub input: PatternArgs,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhistarArgs {
    #[command(flatten)]
    pub input: PatternArgs,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[command(flatten)]
    pub discrepancy: DiscrepancyArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: PatternArgs,
    /// `name=raster-file`, or one of the built-ins x, y, x2, y2. Repeatable.
    #[arg(long = "covariate")]
    pub covariates: Vec<String>,
    /// none, indicator, idw or kernel.
    #[arg(long)]
    pub offset: Option<String>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fitted intensity raster here.
    #[arg(long)]
    pub intensity_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[command(flatten)]
    pub input: PatternArgs,
    /// Fitted intensity raster.
    #[arg(long)]
    pub fitted: PathBuf,
    /// chi2 or mise.
    #[arg(long)]
    pub metric: Option<String>,
    /// True intensity raster (mise only).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Quadrat partition `ROWSxCOLS`.
    #[arg(long)]
    pub quadrats: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// mise or chi2.
    #[arg(long)]
    pub metric: Option<String>,
    /// Comma-separated subset of none,I,IDW,KS.
    #[arg(long)]
    pub methods: Option<String>,
    /// Quadrat partition `ROWSxCOLS`.
    #[arg(long)]
    pub quadrats: Option<String>,
    /// Fitted covariates (comma-separated built-ins); default depends on the family.
    #[arg(long)]
    pub covariates: Option<String>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Pattern CSV; the bundled Redwood fixture when omitted.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<PathBuf>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Bandwidth of the displayed kernel intensity (default: likelihood cross-validation).
    #[arg(long)]
    pub kernel_bandwidth: Option<f64>,
    /// Bandwidth of the smoothed residuals (default: the kernel intensity bandwidth).
    #[arg(long)]
    pub residual_bandwidth: Option<f64>,
    /// Skip PNG output.
    #[arg(long)]
    pub no_figures: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
