use std::io;

use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch, out-of-range parameter, or otherwise unusable input.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix did not have the rank the operation needs.
    #[error("structural error: {0}")]
    Structural(String),

    /// Malformed EP store or code configuration.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Exhaustive search would be infeasible.
    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}
