use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters violate a documented invariant.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: String },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A field does not vanish near the edge of its grid.
    #[error("truncation: {edge}")]
    Truncation { edge: String },

    #[error("vacuum: density {rho:e} at cell {cell} (t = {t})")]
    Vacuum { rho: f64, cell: usize, t: f64 },

    #[error("disturbance reached the domain boundary at t = {t}")]
    BoundaryReached { t: f64 },

    #[error("lifespan sweep failed for eps = {eps:?}: {reason}")]
    Sweep { eps: Vec<f64>, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage/config problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Parameter(_) => 2,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 2,
            Error::NumericalFailure { .. }
            | Error::InsufficientData { .. }
            | Error::Truncation { .. }
            | Error::Vacuum { .. }
            | Error::BoundaryReached { .. }
            | Error::Sweep { .. } => 3,
        }
    }
}
