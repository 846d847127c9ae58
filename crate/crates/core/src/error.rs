use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("missing configuration: {0}")]
    MissingConfig(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("attention distribution invalid: {0}")]
    InvalidDistribution(String),

    #[error("question id mismatch: `{normal}` vs `{shuffled}`")]
    IdMismatch { normal: String, shuffled: String },

    #[error("zero-norm embedding at step {0}")]
    ZeroNormEmbedding(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfUnitInterval { name, value })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
