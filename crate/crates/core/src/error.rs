//! Error type shared by the library.

use thiserror::Error;

/// Errors returned by code construction, decoding, analysis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid Reed-Muller order {order} for depth {depth}")]
    InvalidOrder { depth: u32, order: u32 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("block length {0} too large for exhaustive evaluation")]
    TooLarge(usize),

    #[error("list is empty")]
    EmptyList,

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("path metric rule requires ternary LLRs")]
    NotTernary,

    #[error("an EPMU table is required by the configured path metric rule")]
    MissingEpmuTable,

    #[error("target FER {0} is not bracketed by the records")]
    NotBracketed(f64),

    #[error("grid spacing {spacing} too coarse for threshold {delta}")]
    GridTooCoarse { spacing: f64, delta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
