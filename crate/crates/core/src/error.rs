use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("point ({x}, {y}) lies outside the observation window")]
    PointOutsideWindow { x: f64, y: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("location ({x}, {y}) is outside the surface domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("no data: {0}")]
    NoData(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("invalid radius grid: {0}")]
    InvalidGrid(String),

    #[error("discrepancy integrand is singular: radius grid starts at r0 = {0} <= 0")]
    SingularIntegrand(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("design matrix is rank deficient; collinear terms: {}", .terms.join(", "))]
    RankDeficient { terms: Vec<String> },

    #[error("fit did not converge")]
    NotConverged,

    #[error("intensity {value} exceeds the dominating bound {bound}")]
    DominatingBound { value: f64, bound: f64 },

    #[error("circulant embedding failed: {0}")]
    Embedding(String),

    #[error("quadrat tile (row {row}, col {col}) has zero fitted mass")]
    DegenerateTile { row: usize, col: usize },

    #[error("mark count {marks} does not match point count {points}")]
    MarkCount { marks: usize, points: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidWindow(_) | InvalidGrid(_) | InvalidParameter { .. } | Config(_) => {
                ErrorClass::Config
            }
            PointOutsideWindow { .. }
            | NonFinite(_)
            | OutOfDomain { .. }
            | InsufficientPoints { .. }
            | NoData(_)
            | GridMismatch(_)
            | MarkCount { .. }
            | DegenerateTile { .. }
            | Parse(_)
            | Io(_)
            | Csv(_)
            | Json(_) => ErrorClass::Data,
            SingularIntegrand(_)
            | RankDeficient { .. }
            | NotConverged
            | DominatingBound { .. }
            | Embedding(_) => ErrorClass::Numerical,
        }
    }
}
