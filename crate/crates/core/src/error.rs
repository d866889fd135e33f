use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// Too few paths satisfied the conditioning event for a conditional estimate.
    #[error("estimation floor unmet: {observed} conditioning paths, need at least {required}")]
    FloorUnmet { observed: usize, required: usize },

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("tail integral diverges; no finite value")]
    DivergentTail,

    #[error("quantile undefined at probability {0}")]
    QuantileUndefined(f64),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
