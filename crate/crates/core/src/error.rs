use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("trajectory too short: {len} point(s), need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("invalid data point: {0}")]
    InvalidPoint(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quantization mismatch: {0}")]
    ConfigMismatch(String),

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("invalid segment count {n}: must be in 1..={max}")]
    InvalidSegmentCount { n: usize, max: usize },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
