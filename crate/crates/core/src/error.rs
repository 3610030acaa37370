use std::path::PathBuf;

use thiserror::Error;

use crate::candidates::ProviderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("frequency table is empty")]
    EmptyTable,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("text contains no words or sentences")]
    EmptyText,

    #[error("no in-vocabulary tokens in {0}")]
    NoEmbeddings(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistical test undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

/// Reads a whole UTF-8 file, mapping failures onto [`Error::Io`].
pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a one-entry-per-line list, skipping blank lines and `#` comments.
pub(crate) fn read_list(path: &std::path::Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
