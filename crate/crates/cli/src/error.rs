use std::path::PathBuf;

use excsim_core::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed document or a value that fails validation.
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Sim(#[from] SimError),

    /// A metric or trajectory entry came out non-finite.
    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Sim(e) if e.is_numerical() => 2,
            CliError::Sim(SimError::EmptyChannel { .. }) => 2,
            CliError::Sim(_) => 1,
            CliError::NonFinite(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("could not parse configuration: {0}")]
    Parse(String),

    /// `key` is the dotted path of the offending entry.
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Parse(_) => None,
        }
    }
}
