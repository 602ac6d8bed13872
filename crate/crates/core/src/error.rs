use thiserror::Error;

/// Errors raised by the channel, training and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("angle cosine {0} outside [-1, 1]")]
    AngleOutOfRange(f64),

    #[error("{name} must be at least {min}, got {value}")]
    TooSmall {
        name: &'static str,
        min: usize,
        value: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("support index {index} out of range for {columns} dictionary columns")]
    SupportOutOfRange { index: usize, columns: usize },

    #[error("true channel has zero Frobenius norm")]
    ZeroChannel,

    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
