use std::path::PathBuf;

use thiserror::Error;

/// Invalid scenario or sweep input. Always names the offending field.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// A run aborted because an internal invariant or protocol rule was violated.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("connection {conn}: ack {ack_no} beyond highest sequence sent {snd_max}")]
    AckBeyondSent {
        conn: u32,
        ack_no: u64,
        snd_max: u64,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output: {0}")]
    Output(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
