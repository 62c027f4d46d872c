//! Error type shared by every module in the core crate.

use alloc::string::String;

/// Errors surfaced by index construction, search, and predicate evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Two vectors with different dimensionality were compared.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Cosine distance against a zero-norm vector is undefined.
    #[error("cosine distance undefined for a zero-norm vector")]
    ZeroNorm,

    /// A vector containing NaN or infinity was rejected at ingest.
    #[error("non-finite component in vector {node}")]
    NonFinite { node: usize },

    /// A caller violated an API precondition (bad parameter, out-of-range
    /// node, duplicate insert, ...).
    #[error("invalid usage: {0}")]
    Usage(String),

    /// Malformed external data (mask length mismatch, corrupt file, ...).
    #[error("format error: {0}")]
    Format(String),

    /// An I/O failure reported by a disk-backed store.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
