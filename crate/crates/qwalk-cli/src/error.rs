//! CLI error taxonomy with distinct exit codes: usage (2), input (3),
//! resource (4).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Invalid parameters or flag combinations.
    Usage(String),
    /// Malformed or missing input files.
    Input(String),
    /// Memory, I/O, or other environment failures.
    Resource(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> CliError {
        CliError::Resource(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Resource(m) => write!(f, "resource error: {m}"),
        }
    }
}

impl From<qwalk_core::Error> for CliError {
    fn from(e: qwalk_core::Error) -> CliError {
        match e {
            qwalk_core::Error::InvalidParam(m) => CliError::Usage(m),
            qwalk_core::Error::Format { .. } => CliError::Input(e.to_string()),
            qwalk_core::Error::Resource(m) => CliError::Resource(m),
            qwalk_core::Error::Io(io) => CliError::Resource(io.to_string()),
        }
    }
}
