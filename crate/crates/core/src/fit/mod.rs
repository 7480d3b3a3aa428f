//! Log-linear Poisson intensity models fitted on a quadrature discretisation.

mod method;
mod model;
mod poisson;
mod quadrature;
mod smoothing;

pub use method::{
    fit_with_method, indicator_display, offset_model, point_marks, EstimationSettings, MethodFit,
    OffsetMethod,
};
pub use model::{
    aic, Coordinate, Covariate, Covariates, FitResult, FitSummary, ModelEcho, ModelSpec, Offset, OffsetMode, INTERCEPT,
};
pub use poisson::{
    fit_poisson, predict_intensity, GRADIENT_TOL, MAX_ITERATIONS, OFFSET_FLOOR,
    RELATIVE_OBJECTIVE_TOL,
};
pub use quadrature::{default_dummy_per_side, make_quadrature, QuadratureScheme, MIN_DUMMY_PER_SIDE};
pub use smoothing::{
    kernel_intensity, likelihood_cv_bandwidth, likelihood_cv_score, smoothed_raw_residuals,
};
