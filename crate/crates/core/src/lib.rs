//! Intensity estimation for spatial point patterns with Poisson likelihoods
//! weighted by local K-function interaction scores.

pub mod error;
pub mod fit;
pub mod geom;
pub mod gof;
pub mod interaction;
pub mod io;
pub mod localstats;
mod optim;
pub mod pattern;
pub mod raster;
pub mod simulate;

pub use error::{Error, ErrorClass, Result};
pub use fit::{Covariates, FitResult, ModelSpec, OffsetMethod};
pub use geom::{ObservationWindow, Point};
pub use localstats::RadiusGrid;
pub use pattern::{MarkedPattern, PointPattern};
pub use raster::{RasterDims, RasterSurface};
pub use simulate::{Scenario, ScenarioSpec};
