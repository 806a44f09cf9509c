use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: row {row}: {message}")]
    Row {
        path: String,
        row: usize,
        message: String,
    },

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("missing weight for edge type `{0}`")]
    MissingWeight(String),

    #[error("weight for `{key}` must be positive and finite, got {value}")]
    InvalidWeight { key: String, value: f64 },

    #[error("power iteration from vertex {source_vertex} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        source_vertex: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("fitness evaluation failed: {0}")]
    Fitness(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse classification used by the command-line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Runtime,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::Json { .. } => ErrorClass::Config,
            Error::Data(_)
            | Error::Row { .. }
            | Error::UnknownUser(_)
            | Error::MissingWeight(_)
            | Error::InvalidWeight { .. }
            | Error::Io { .. } => ErrorClass::Data,
            Error::NotConverged { .. } | Error::Fitness(_) => ErrorClass::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
