use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lisafit::fit::{fit_with_method, point_marks, Coordinate, Covariates, OffsetMethod};
use lisafit::gof::{mise, pearson_chi2, run_study_resolved, Metric, QuadratPartition, StudyConfig};
use lisafit::io::{
    read_pattern_with_sidecar, read_raster_file, write_marked_csv, write_pattern, write_raster_file,
};
use lisafit::localstats::{global_k, local_k_all};
use lisafit::simulate::{replicate_seed, Scenario, ScenarioSpec};
use lisafit::{PointPattern, RasterSurface};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Cli, Command, FitArgs, Format, GofArgs, LocalkArgs, PatternArgs, PhistarArgs, ReportArgs,
    SimulateArgs, StudyArgs,
};
use crate::config::{self, FileConfig, RunConfig};
use crate::figures;
use crate::report::{build_report, redwood, ReportOptions};
use crate::CliError;

const DEFAULT_REPLICATES: usize = 100;
const DEFAULT_QUADRATS: &str = "5x5";

struct Ctx {
    seed: Option<u64>,
    threads: Option<usize>,
    format: Option<Format>,
    file: FileConfig,
}

impl Ctx {
    fn run_config(&self, command: &'static str, default_format: Format) -> RunConfig {
        RunConfig {
            command,
            seed: self.seed,
            threads: self.threads,
            format: self.format(default_format),
            paths: BTreeMap::new(),
            options: serde_json::Map::new(),
        }
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = config::thread_count(cli.threads, &file)?;
    let ctx = Ctx {
        seed: cli.seed.or(file.seed),
        threads,
        format: cli.format.or(file.format),
        file,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Localk(a) => localk(&ctx, a),
        Command::Phistar(a) => phistar(&ctx, a),
        Command::Fit(a) => fit(&ctx, a),
        Command::Gof(a) => gof(&ctx, a),
        Command::Study(a) => study(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    })
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => fs::create_dir_all(d).map_err(|e| output_error(d, e)),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    fs::write(path, text + "\n").map_err(|e| output_error(path, e))
}

fn load_pattern(a: &PatternArgs) -> Result<PointPattern, CliError> {
    Ok(read_pattern_with_sidecar(&a.pattern, a.window.as_deref())?)
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioSpec, CliError> {
    let text = fs::read_to_string(path).map_err(lisafit::Error::from)?;
    let mut spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("scenario {}: {e}", path.display())))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<(), CliError> {
    let spec = load_scenario(&a.scenario, ctx.seed)?;
    let replicates = a.replicates.or(ctx.file.replicates).unwrap_or(1);
    if replicates == 0 {
        return Err(CliError::Config("replicates: must be at least 1".into()));
    }
    let scenario = Scenario::resolve(&spec)?;
    let cfg = ctx
        .run_config("simulate", Format::Csv)
        .path("scenario", &a.scenario)
        .path("out", &a.out)
        .option("replicates", replicates);
    use rayon::prelude::*;
    let patterns = (0..replicates)
        .into_par_iter()
        .map(|i| scenario.sample(replicate_seed(spec.seed, i as u64)))
        .collect::<lisafit::Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out).map_err(|e| output_error(&a.out, e))?;
    let mut entries = Vec::with_capacity(replicates);
    for (i, p) in patterns.iter().enumerate() {
        let name = format!("rep_{:04}.csv", i + 1);
        write_pattern(&a.out.join(&name), p)?;
        entries.push(json!({
            "index": i,
            "file": name,
            "seed": replicate_seed(spec.seed, i as u64),
            "n_points": p.len(),
        }));
    }
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "config": cfg,
            "scenario": spec,
            "resolved_parameters": scenario.resolved_parameters(),
            "replicates": entries,
        }),
    )
}

fn localk(ctx: &Ctx, a: LocalkArgs) -> Result<(), CliError> {
    let p = load_pattern(&a.input)?;
    let mut s = lisafit::fit::EstimationSettings::default();
    config::radius(&a.radius, &ctx.file, &mut s);
    let grid = s.radius_grid(&p)?;
    let locals = local_k_all(&p, &grid)?;
    let global = global_k(&locals)?;
    let cfg = ctx
        .run_config("localk", Format::Json)
        .path("pattern", &a.input.pattern)
        .path("out", &a.out)
        .option("radii", s.radii)
        .option("r_max", grid.r_max());
    ensure_parent(&a.out)?;
    match cfg.format {
        Format::Json => write_json(
            &a.out,
            &json!({
                "config": cfg,
                "r": grid.values(),
                "global_k": global.k_values,
                "local_k": locals.iter().map(|l| &l.k_values).collect::<Vec<_>>(),
            }),
        ),
        Format::Csv => {
            let mut text = String::from("r,global");
            for i in 0..locals.len() {
                text.push_str(&format!(",k_{i}"));
            }
            text.push('\n');
            for (k, r) in grid.values().iter().enumerate() {
                text.push_str(&format!("{r},{}", global.k_values[k]));
                for l in &locals {
                    text.push_str(&format!(",{}", l.k_values[k]));
                }
                text.push('\n');
            }
            fs::write(&a.out, text).map_err(|e| output_error(&a.out, e))
        }
    }
}

fn phistar(ctx: &Ctx, a: PhistarArgs) -> Result<(), CliError> {
    let p = load_pattern(&a.input)?;
    let mut s = lisafit::fit::EstimationSettings::default();
    config::radius(&a.radius, &ctx.file, &mut s);
    s.discrepancy = config::discrepancy(&a.discrepancy, &ctx.file)?;
    let marks = point_marks(&p, &s)?;
    let cfg = ctx
        .run_config("phistar", Format::Json)
        .path("pattern", &a.input.pattern)
        .path("out", &a.out)
        .option("radii", s.radii)
        .option("r_max", s.r_max)
        .option("discrepancy", s.discrepancy);
    ensure_parent(&a.out)?;
    match cfg.format {
        Format::Json => {
            let points: Vec<_> = marks
                .iter()
                .map(|(x, m)| json!({"x": x.x, "y": x.y, "phi_star": m}))
                .collect();
            write_json(&a.out, &json!({"config": cfg, "points": points}))
        }
        Format::Csv => {
            let f = fs::File::create(&a.out).map_err(|e| output_error(&a.out, e))?;
            Ok(write_marked_csv(f, &marks)?)
        }
    }
}

fn covariates(specs: &[String], p: &PointPattern) -> Result<(Vec<String>, Covariates), CliError> {
    let mut names = Vec::new();
    let mut cov = Covariates::new();
    for s in specs {
        match s.split_once('=') {
            Some((name, path)) => {
                let surface = read_raster_file(Path::new(path))?;
                if surface.window() != p.window() {
                    return Err(CliError::Config(format!(
                        "covariate `{name}`: raster window does not match the pattern window"
                    )));
                }
                cov.insert(name, surface);
                names.push(name.to_string());
            }
            None => {
                cov.insert(s.clone(), Coordinate::parse(s)?);
                names.push(s.clone());
            }
        }
    }
    Ok((names, cov))
}

fn fit(ctx: &Ctx, a: FitArgs) -> Result<(), CliError> {
    let p = load_pattern(&a.input)?;
    let settings = config::estimation(&a.estimation, &ctx.file)?;
    let method: OffsetMethod = a
        .offset
        .as_ref()
        .or(ctx.file.offset.as_ref())
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(OffsetMethod::None);
    let cov_specs = if a.covariates.is_empty() {
        ctx.file.covariates.clone().unwrap_or_default()
    } else {
        a.covariates.clone()
    };
    let (names, cov) = covariates(&cov_specs, &p)?;
    let marks = if method.needs_marks() {
        Some(point_marks(&p, &settings)?)
    } else {
        None
    };
    let mf = fit_with_method(&p, &cov, &names, method, marks.as_ref(), &settings)?;
    let mut cfg = ctx
        .run_config("fit", Format::Json)
        .path("pattern", &a.input.pattern)
        .path("out", &a.out)
        .option("offset", method)
        .option("covariates", &cov_specs)
        .option("settings", &settings);
    if let Some(path) = &a.intensity_out {
        cfg = cfg.path("intensity_out", path);
        ensure_parent(path)?;
        write_raster_file(path, &mf.intensity)?;
    }
    write_json(
        &a.out,
        &json!({
            "config": cfg,
            "n_points": p.len(),
            "fit": mf.fit.summary(),
        }),
    )
}

fn gof(ctx: &Ctx, a: GofArgs) -> Result<(), CliError> {
    let p = load_pattern(&a.input)?;
    let fitted = read_raster_file(&a.fitted)?;
    let metric: Metric = a
        .metric
        .as_ref()
        .or(ctx.file.metric.as_ref())
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(Metric::Chi2);
    let quadrats = config::parse_quadrats(
        a.quadrats
            .as_deref()
            .or(ctx.file.quadrats.as_deref())
            .unwrap_or(DEFAULT_QUADRATS),
    )?;
    let mut cfg = ctx
        .run_config("gof", Format::Json)
        .path("pattern", &a.input.pattern)
        .path("fitted", &a.fitted)
        .path("out", &a.out)
        .option("metric", metric);
    let value = match metric {
        Metric::Chi2 => {
            let q = QuadratPartition::new(*p.window(), quadrats[0], quadrats[1])?;
            cfg = cfg.option("quadrats", quadrats);
            pearson_chi2(&p, &fitted, &q)?
        }
        Metric::Mise => {
            let truth_path = a
                .truth
                .as_ref()
                .ok_or_else(|| CliError::Config("truth: required for metric mise".into()))?;
            cfg = cfg.path("truth", truth_path);
            let truth: RasterSurface = read_raster_file(truth_path)?;
            mise(std::slice::from_ref(&fitted), &truth)?
        }
    };
    write_json(&a.out, &json!({"config": cfg, "metric": metric, "value": value}))
}

fn study(ctx: &Ctx, a: StudyArgs) -> Result<(), CliError> {
    let spec = load_scenario(&a.scenario, ctx.seed)?;
    let settings = config::estimation(&a.estimation, &ctx.file)?;
    let metric: Metric = a
        .metric
        .as_ref()
        .or(ctx.file.metric.as_ref())
        .ok_or_else(|| CliError::Config("metric: required (mise or chi2)".into()))?
        .parse()?;
    let methods = match (&a.methods, &ctx.file.methods) {
        (Some(s), _) => s.split(',').map(|m| m.trim().parse()).collect::<Result<Vec<OffsetMethod>, _>>()?,
        (None, Some(v)) => v.iter().map(|m| m.parse()).collect::<Result<Vec<OffsetMethod>, _>>()?,
        (None, None) => OffsetMethod::ALL.to_vec(),
    };
    let quadrats = config::parse_quadrats(
        a.quadrats
            .as_deref()
            .or(ctx.file.quadrats.as_deref())
            .unwrap_or(DEFAULT_QUADRATS),
    )?;
    let covariates = match (&a.covariates, &ctx.file.covariates) {
        (Some(s), _) => Some(
            s.split(',')
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .collect(),
        ),
        (None, Some(v)) => Some(v.clone()),
        (None, None) => None,
    };
    let config = StudyConfig {
        replicates: a.replicates.or(ctx.file.replicates).unwrap_or(DEFAULT_REPLICATES),
        methods,
        metric,
        quadrats,
        covariates,
        settings,
    };
    let scenario = Scenario::resolve(&spec)?;
    let report = run_study_resolved(&scenario, &config)?;
    let cfg = ctx
        .run_config("study", Format::Json)
        .path("scenario", &a.scenario)
        .path("out", &a.out);
    match cfg.format {
        Format::Json => {
            let mut value = serde_json::to_value(&report).map_err(|e| output_error(&a.out, e))?;
            value["run_config"] = serde_json::to_value(&cfg).map_err(|e| output_error(&a.out, e))?;
            write_json(&a.out, &value)
        }
        Format::Csv => {
            ensure_parent(&a.out)?;
            let f = fs::File::create(&a.out).map_err(|e| output_error(&a.out, e))?;
            Ok(report.write_csv(f)?)
        }
    }
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<(), CliError> {
    let (p, source) = match &a.pattern {
        Some(path) => (
            read_pattern_with_sidecar(path, a.window.as_deref())?,
            path.display().to_string(),
        ),
        None => (redwood(), "bundled:redwood".to_string()),
    };
    let opts = ReportOptions {
        settings: config::estimation(&a.estimation, &ctx.file)?,
        kernel_bandwidth: a.kernel_bandwidth.or(ctx.file.kernel_bandwidth),
        residual_bandwidth: a.residual_bandwidth.or(ctx.file.residual_bandwidth),
    };
    let art = build_report(&p, &opts)?;
    let cfg = ctx
        .run_config("report", Format::Json)
        .path("out", &a.out)
        .option("pattern", &source)
        .option("kernel_bandwidth", opts.kernel_bandwidth)
        .option("residual_bandwidth", opts.residual_bandwidth);

    fs::create_dir_all(&a.out).map_err(|e| output_error(&a.out, e))?;
    write_json(&a.out.join("aic.json"), &json!({"config": cfg, "report": art.summary}))?;
    let marks_path = a.out.join("phistar.csv");
    write_marked_csv(
        fs::File::create(&marks_path).map_err(|e| output_error(&marks_path, e))?,
        &art.marks,
    )?;
    let mut rasters: Vec<(String, PathBuf)> = Vec::new();
    let mut put = |name: String, s: &RasterSurface| -> Result<(), CliError> {
        let path = a.out.join(format!("{name}.raster"));
        write_raster_file(&path, s)?;
        rasters.push((name, path));
        Ok(())
    };
    for (f, r) in art.fits.iter().zip(&art.residuals) {
        let label = f.method.label();
        put(format!("offset_{label}"), &f.offset)?;
        put(format!("intensity_{label}"), &f.intensity)?;
        put(format!("residuals_{label}"), r)?;
    }
    put("kernel_intensity".into(), &art.kernel)?;

    if !a.no_figures {
        for (name, path) in &rasters {
            let s = read_raster_file(path)?;
            figures::heatmap(&s, &a.out.join(format!("{name}.png")))?;
        }
        let marks = lisafit::io::read_marked_csv(
            fs::File::open(&marks_path).map_err(lisafit::Error::from)?,
            p.window(),
        )?;
        figures::point_map(&marks, &a.out.join("phistar_points.png"))?;
    }
    Ok(())
}
