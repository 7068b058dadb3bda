use std::path::PathBuf;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation was asked to evaluate at a point where it is undefined,
    /// e.g. the one-point ratio at w = w*.
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    /// A direction-dependent projection or construction had no direction to work with.
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    #[error("divergence at step {step}: loss {loss:.6e}")]
    Divergence { step: usize, loss: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The 2x2 quadratic form has no negative eigenvalue, so there is no
    /// negative tail to estimate.
    #[error("semidefinite form: lambda_minus = {lambda_minus}")]
    SemidefiniteForm { lambda_minus: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
