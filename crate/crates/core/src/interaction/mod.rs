//! Interaction scores from local K-functions and their extension to the window.

mod discrepancy;
mod interpolate;

pub use discrepancy::{discrepancy, phi_star_at_points, DiscrepancyKind, DiscrepancySpec};
pub use interpolate::{
    idw_at, interpolate, interpolate_at, kernel_smooth_at, lscv_bandwidth, lscv_interval, lscv_score,
    InterpolationMethod, InterpolationSpec, IDW_COINCIDENCE_TOL,
};
