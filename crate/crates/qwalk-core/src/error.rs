//! Crate-wide error type.
//!
//! Variants are grouped by what the caller can do about them: bad parameters
//! (caller bug / usage error), malformed input files, and resource exhaustion.
//! The CLI maps these onto distinct process exit codes.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// An input file could not be parsed. `line` is 1-based where known.
    #[error("malformed input{}: {msg}", fmt_line(.line))]
    Format { line: Option<usize>, msg: String },

    /// Memory or other resource limits were exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

impl Error {
    pub fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidParam(msg.to_string())
    }

    pub fn format(line: Option<usize>, msg: impl fmt::Display) -> Self {
        Error::Format {
            line,
            msg: msg.to_string(),
        }
    }

    pub fn resource(msg: impl fmt::Display) -> Self {
        Error::Resource(msg.to_string())
    }
}
