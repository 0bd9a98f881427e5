use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} is limited to n <= {max} (got {n})")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("vertex {vertex} is unreachable from root {root}")]
    Unreachable { vertex: usize, root: usize },

    #[error("negative correlation estimate {value} at ({u}, {v}); expected a ferromagnetic input")]
    NegativeCorrelation { u: usize, v: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
