use serde::{Deserialize, Serialize};

use super::model::{Covariates, FitResult, ModelSpec, Offset};
use super::poisson::{fit_poisson, predict_intensity};
use super::quadrature::{default_dummy_per_side, make_quadrature};
use crate::error::{Error, Result};
use crate::interaction::{interpolate, phi_star_at_points, DiscrepancySpec, InterpolationSpec};
use crate::localstats::{RadiusGrid, DEFAULT_RADII};
use crate::pattern::{MarkedPattern, PointPattern};
use crate::raster::{RasterDims, RasterSurface};

/// How the interaction score enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OffsetMethod {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "I")]
    Indicator,
    #[serde(rename = "IDW")]
    Idw,
    #[serde(rename = "KS")]
    Kernel,
}

impl OffsetMethod {
    pub const ALL: [OffsetMethod; 4] = [Self::None, Self::Indicator, Self::Idw, Self::Kernel];

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Indicator => "I",
            Self::Idw => "IDW",
            Self::Kernel => "KS",
        }
    }

    pub fn needs_marks(self) -> bool {
        self != Self::None
    }
}

impl std::fmt::Display for OffsetMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for OffsetMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "unpenalised" => Ok(Self::None),
            "I" | "i" | "indicator" => Ok(Self::Indicator),
            "IDW" | "idw" => Ok(Self::Idw),
            "KS" | "ks" | "kernel" => Ok(Self::Kernel),
            other => Err(Error::param(
                "offset",
                format!("unknown method `{other}` (expected none, indicator, idw, kernel)"),
            )),
        }
    }
}

/// Tunables shared by every offset method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSettings {
    pub radii: usize,
    /// Defaults to a quarter of the shorter window side.
    pub r_max: Option<f64>,
    pub discrepancy: DiscrepancySpec,
    pub idw_power: f64,
    /// Nadaraya-Watson bandwidth; `None` selects it by cross-validation.
    pub kernel_bandwidth: Option<f64>,
    /// Dummy points per side; `None` picks 64, or 100 above 500 points.
    pub dummy_grid: Option<usize>,
    pub raster: RasterDims,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII,
            r_max: None,
            discrepancy: DiscrepancySpec::default(),
            idw_power: 2.0,
            kernel_bandwidth: None,
            dummy_grid: None,
            raster: RasterDims::default(),
        }
    }
}

impl EstimationSettings {
    pub fn radius_grid(&self, p: &PointPattern) -> Result<RadiusGrid> {
        RadiusGrid::for_window(p.window(), self.r_max, self.radii)
    }

    pub fn interpolation(&self, method: OffsetMethod) -> Option<InterpolationSpec> {
        match method {
            OffsetMethod::None => None,
            OffsetMethod::Indicator => Some(InterpolationSpec::indicator()),
            OffsetMethod::Idw => Some(InterpolationSpec::idw(self.idw_power)),
            OffsetMethod::Kernel => Some(InterpolationSpec::kernel(self.kernel_bandwidth)),
        }
    }

    pub fn dummy_per_side(&self, n: usize) -> usize {
        self.dummy_grid.unwrap_or_else(|| default_dummy_per_side(n))
    }
}

/// Interaction score at every data point.
pub fn point_marks(p: &PointPattern, settings: &EstimationSettings) -> Result<MarkedPattern> {
    phi_star_at_points(p, &settings.radius_grid(p)?, &settings.discrepancy)
}

/// Surface shown for the indicator offset: the point mark in cells holding a data
/// point (largest mark if several), one elsewhere.
pub fn indicator_display(marks: &MarkedPattern, dims: RasterDims) -> Result<RasterSurface> {
    let w = *marks.pattern().window();
    let mut values = vec![f64::NEG_INFINITY; dims.cells()];
    for (x, m) in marks.iter() {
        let (ix, iy) = w.grid_cell(dims.nx, dims.ny, x).expect("point lies in the window");
        let v = &mut values[iy * dims.nx + ix];
        *v = v.max(m);
    }
    for v in &mut values {
        if *v == f64::NEG_INFINITY {
            *v = 1.0;
        }
    }
    RasterSurface::new(w, dims, values)
}

/// The model for `method`, together with the offset surface it implies on the raster.
pub fn offset_model(
    method: OffsetMethod,
    covariate_names: &[String],
    marks: Option<&MarkedPattern>,
    window: crate::geom::ObservationWindow,
    settings: &EstimationSettings,
) -> Result<(ModelSpec, RasterSurface)> {
    let base = ModelSpec::new(covariate_names.to_vec());
    let Some(spec) = settings.interpolation(method) else {
        return Ok((base, RasterSurface::constant(window, settings.raster, 1.0)?));
    };
    let marks = marks.ok_or(Error::NoData("offset method requires point marks"))?;
    match method {
        OffsetMethod::Indicator => Ok((
            base.with_indicator(marks.marks().to_vec())?,
            indicator_display(marks, settings.raster)?,
        )),
        _ => {
            let model = base.with_field(marks.clone(), &spec)?;
            let Offset::Field { spec: resolved, .. } = &model.offset else {
                unreachable!("with_field sets a field offset")
            };
            let s = interpolate(marks, resolved, settings.raster)?;
            Ok((model, s))
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: OffsetMethod,
    pub fit: FitResult,
    pub offset: RasterSurface,
    pub intensity: RasterSurface,
}

/// Builds the offset for `method`, fits, and predicts on the settings raster.
pub fn fit_with_method(
    p: &PointPattern,
    cov: &Covariates,
    covariate_names: &[String],
    method: OffsetMethod,
    marks: Option<&MarkedPattern>,
    settings: &EstimationSettings,
) -> Result<MethodFit> {
    let (model, offset) = offset_model(method, covariate_names, marks, *p.window(), settings)?;
    let q = make_quadrature(p, settings.dummy_per_side(p.len()))?;
    let fit = fit_poisson(p, cov, &model, &q)?;
    let intensity = predict_intensity(&fit, cov, settings.raster)?;
    Ok(MethodFit {
        method,
        fit,
        offset,
        intensity,
    })
}
