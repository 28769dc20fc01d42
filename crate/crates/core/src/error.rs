use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e} after {evaluations} evaluations")]
    Quadrature {
        value: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at time node {node}")]
    NonFinite { node: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
