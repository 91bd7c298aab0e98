use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("baseline not found: {0}")]
    BaselineMissing(PathBuf),

    #[error("malformed baseline: {0}")]
    Baseline(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl SweepError {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        SweepError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SweepError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Parse { .. }
            | SweepError::Validation { .. }
            | SweepError::ConfigRead { .. }
            | SweepError::BaselineMissing(_)
            | SweepError::UnknownPreset(_) => 2,
            _ => 1,
        }
    }
}
