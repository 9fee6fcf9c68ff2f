//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the xrpo library.
#[derive(Debug, Error)]
pub enum XrpoError {
    /// A numeric or structural precondition was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A structured input row failed to parse or validate.
    #[error("schema error at row {row}: {msg}")]
    Schema { row: usize, msg: String },

    /// Filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A persisted artifact violates a corpus invariant.
    #[error("audit error: {0}")]
    Audit(String),

    /// Remote embedding backend failure after retries.
    #[error("transport error: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, XrpoError>;
