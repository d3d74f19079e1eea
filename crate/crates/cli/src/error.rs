use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        source: equidist_core::Error,
    },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<equidist_core::Error> for CliError {
    fn from(source: equidist_core::Error) -> Self {
        CliError::Core {
            context: "computation failed".into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
