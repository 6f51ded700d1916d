use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const HALT: i32 = 3;
    pub const RESOLUTION: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}: {message}")]
    ConfigLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical halt: {0}")]
    Halt(String),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigLine { .. } | CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Halt(_) => exit::HALT,
            CliError::Resolution(_) => exit::RESOLUTION,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<berger_core::Error> for CliError {
    fn from(e: berger_core::Error) -> Self {
        use berger_core::Error as E;
        match e {
            E::UnderResolved(m) => CliError::Resolution(m),
            E::InvalidParameter(m) => CliError::Config(m),
            E::InvalidGrid(n) => CliError::Config(format!("invalid grid size {n}")),
            other => CliError::Halt(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
