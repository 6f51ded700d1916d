use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs an even number of points >= 16, got {0}")]
    InvalidGrid(usize),
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field `{field}` is not strictly positive and finite at index {index} (value {value})")]
    NonPositive {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("no singularity indicated: {0}")]
    NoSingularity(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
