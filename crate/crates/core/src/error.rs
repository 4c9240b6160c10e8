use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and its exporters.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument was outside the domain of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A scenario configuration value failed validation.
    #[error("invalid configuration key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    /// The configuration document could not be parsed.
    #[error("failed to parse configuration: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("plotting failed for {}: {reason}", path.display())]
    Plot { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
