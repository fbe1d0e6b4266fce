//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the click-feature pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("configuration error: {0}")]
    Config(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A file record could not be parsed. `record` is the zero-based index
    /// of the offending row or chunk.
    #[error("parse error at record {record}: {message}")]
    Parse { record: usize, message: String },

    /// A file does not match its declared binary or text format.
    #[error("format error: {0}")]
    Format(String),

    /// A numerical routine failed (factorization breakdown, non-finite input).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: configuration and
    /// numeric problems exit 1, anything file-related exits 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) | Error::Numeric(_) => 1,
            Error::Parse { .. } | Error::Format(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
