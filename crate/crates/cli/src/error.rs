use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing key: {0}")]
    MissingKey(String),

    #[error("unknown key: {key} (line {line})")]
    UnknownKey { key: String, line: usize },

    #[error("duplicate key: {key} (line {line})")]
    DuplicateKey { key: String, line: usize },

    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },

    #[error("bad value for {key}: {message}")]
    BadValue { key: String, message: String },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] ridgeline_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot build thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),

    #[error("cannot encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn bad_value(key: &str, message: impl Into<String>) -> CliError {
    CliError::BadValue {
        key: key.to_string(),
        message: message.into(),
    }
}
