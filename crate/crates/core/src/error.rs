use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("dimension mismatch at id {id}: expected {expected}, found {found}")]
    DimensionMismatch { id: String, expected: usize, found: usize },

    #[error("zero-norm vector at id {id}")]
    ZeroNorm { id: String },

    #[error("non-finite value in vector at id {id}")]
    NonFinite { id: String },

    #[error("duplicate id {id}")]
    DuplicateId { id: String },

    #[error("empty id at record {index}")]
    EmptyId { index: usize },

    #[error("empty corpus{}", .name.as_deref().map(|n| format!(" {n}")).unwrap_or_default())]
    EmptyCorpus { name: Option<String> },

    #[error("record {id} has no label")]
    MissingLabel { id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

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

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
