use thiserror::Error;

/// Errors surfaced by the beamforming library.
#[derive(Debug, Error)]
pub enum RadcomError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("degenerate retraction: {0}")]
    DegenerateRetraction(String),

    #[error("line search failed to find a step with sufficient decrease after {backtracks} backtracks")]
    LineSearchFailure { backtracks: usize },

    #[error("direction is not a descent direction (slope = {slope})")]
    NotDescentDirection { slope: f64 },

    #[error("covariance design infeasible: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RadcomError>;
