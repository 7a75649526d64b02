//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor operations, decompositions, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Mode index outside `0..ndim`.
    #[error("invalid mode {mode} for tensor with {ndim} modes")]
    InvalidMode { mode: usize, ndim: usize },

    /// A rank, threshold, cluster count, or other configuration value is
    /// out of its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input contains NaN or infinity where finite values are required.
    #[error("non-finite value in input")]
    NonFinite,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (bad magic, version, or length).
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
