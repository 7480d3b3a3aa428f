use lisafit::fit::{
    fit_with_method, kernel_intensity, likelihood_cv_bandwidth, point_marks, smoothed_raw_residuals,
    Covariates, EstimationSettings, MethodFit, OffsetMethod,
};
use lisafit::interaction::lscv_bandwidth;
use lisafit::io::read_points_csv;
use lisafit::{MarkedPattern, ObservationWindow, PointPattern, RasterSurface, Result};
use serde::Serialize;

/// Bundled Redwood fixture (see the header of `data/redwood.csv` for provenance).
pub const REDWOOD_CSV: &str = include_str!("../data/redwood.csv");

pub fn redwood() -> PointPattern {
    let pts = read_points_csv(REDWOOD_CSV.as_bytes()).expect("bundled fixture parses");
    PointPattern::new(pts, ObservationWindow::unit_square()).expect("bundled fixture lies in the unit square")
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    pub settings: EstimationSettings,
    pub kernel_bandwidth: Option<f64>,
    pub residual_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub method: OffsetMethod,
    pub aic: f64,
    pub log_likelihood: f64,
    pub intercept: f64,
    pub intercept_std_error: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub share_above_one: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub n_points: usize,
    pub window: ObservationWindow,
    pub models: Vec<ModelRow>,
    /// Methods sorted by increasing AIC.
    pub aic_order: Vec<OffsetMethod>,
    pub interpolation_bandwidth: f64,
    pub kernel_bandwidth: f64,
    pub residual_bandwidth: f64,
    pub phi_star: MarkSummary,
    pub settings: EstimationSettings,
}

pub struct ReportArtifacts {
    pub summary: ReportSummary,
    pub marks: MarkedPattern,
    pub fits: Vec<MethodFit>,
    pub kernel: RasterSurface,
    pub residuals: Vec<RasterSurface>,
}

fn mark_summary(marks: &[f64]) -> MarkSummary {
    let mut v = marks.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    MarkSummary {
        min: v[0],
        median,
        max: v[n - 1],
        share_above_one: v.iter().filter(|&&m| m > 1.0).count() as f64 / n as f64,
    }
}

/// Fits the intercept-only model under each offset method and builds the display surfaces.
pub fn build_report(p: &PointPattern, opts: &ReportOptions) -> Result<ReportArtifacts> {
    let mut settings = opts.settings.clone();
    let marks = point_marks(p, &settings)?;
    let h_nw = match settings.kernel_bandwidth {
        Some(h) => h,
        None => lscv_bandwidth(&marks)?,
    };
    settings.kernel_bandwidth = Some(h_nw);

    let cov = Covariates::new();
    let fits = OffsetMethod::ALL
        .iter()
        .map(|&m| fit_with_method(p, &cov, &[], m, Some(&marks), &settings))
        .collect::<Result<Vec<_>>>()?;

    let h_kernel = match opts.kernel_bandwidth {
        Some(h) => h,
        None => likelihood_cv_bandwidth(p)?,
    };
    let kernel = kernel_intensity(p, Some(h_kernel), settings.raster)?;
    let h_res = opts.residual_bandwidth.unwrap_or(h_kernel);
    let residuals = fits
        .iter()
        .map(|f| smoothed_raw_residuals(p, &f.intensity, h_res))
        .collect::<Result<Vec<_>>>()?;

    let models: Vec<ModelRow> = fits
        .iter()
        .map(|f| ModelRow {
            method: f.method,
            aic: f.fit.aic,
            log_likelihood: f.fit.log_likelihood,
            intercept: f.fit.theta[0],
            intercept_std_error: f.fit.std_errors()[0],
            converged: f.fit.converged,
            iterations: f.fit.iterations,
        })
        .collect();
    let mut order: Vec<&ModelRow> = models.iter().collect();
    order.sort_by(|a, b| a.aic.total_cmp(&b.aic));

    let summary = ReportSummary {
        n_points: p.len(),
        window: *p.window(),
        aic_order: order.iter().map(|m| m.method).collect(),
        models,
        interpolation_bandwidth: h_nw,
        kernel_bandwidth: h_kernel,
        residual_bandwidth: h_res,
        phi_star: mark_summary(marks.marks()),
        settings,
    };
    Ok(ReportArtifacts {
        summary,
        marks,
        fits,
        kernel,
        residuals,
    })
}
