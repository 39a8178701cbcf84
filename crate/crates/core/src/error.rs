use thiserror::Error;

/// Errors raised by the simulation blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Bit count does not fill a whole number of symbols.
    #[error("framing error: {bits} bits is not a multiple of {bits_per_symbol} bits per symbol")]
    Framing { bits: usize, bits_per_symbol: usize },

    /// Not enough samples for the requested operation.
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Two frames that must agree on sample rate do not.
    #[error("sample rate mismatch: {expected} Hz vs {got} Hz")]
    SampleRateMismatch { expected: f64, got: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
