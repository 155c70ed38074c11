use thiserror::Error;

use crate::optimizer::RunTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or bounds.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation precondition (dimension mismatch,
    /// out-of-box point, empty input).
    #[error("usage error: {0}")]
    Usage(String),

    /// The jittered correlation matrix could not be factorized.
    #[error(
        "correlation matrix not positive definite at jitter {max_jitter:e}; \
         most correlated pair ({first}, {second}) with correlation {correlation}"
    )]
    Conditioning {
        first: usize,
        second: usize,
        correlation: f64,
        max_jitter: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The objective failed at `point`; `trace` holds every evaluation that
    /// completed before the failure.
    #[error("objective evaluation failed at {point:?}: {message}")]
    Evaluation {
        point: Vec<f64>,
        message: String,
        trace: Box<RunTrace>,
    },

    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
