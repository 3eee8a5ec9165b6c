use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const IO: u8 = 1;
    pub const TOLERANCE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("numerical precondition failed at `{path}`: {source}")]
    Numerical {
        path: String,
        #[source]
        source: holonomic_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write report: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("failed to write time series: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    pub fn numerical(path: impl Into<String>, source: holonomic_core::Error) -> Self {
        CliError::Numerical { path: path.into(), source }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => exit::CONFIG,
            CliError::Numerical { .. } => exit::NUMERICAL,
            CliError::Io { .. } | CliError::Serialize(_) | CliError::Csv(_) => exit::IO,
        }
    }
}

/// Attach a field path to core errors.
pub trait AtField<T> {
    fn at(self, path: &str) -> Result<T, CliError>;
}

impl<T> AtField<T> for holonomic_core::Result<T> {
    fn at(self, path: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::numerical(path, e))
    }
}
