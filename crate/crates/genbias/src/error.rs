use std::io;
use std::path::PathBuf;

use genbias_core::{BackendError, LexiconError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: invalid UTF-8", path.display())]
    Utf8 { path: PathBuf, line: usize },
    #[error("{}: {source}", path.display())]
    Lexicon {
        path: PathBuf,
        #[source]
        source: LexiconError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] genbias_core::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status: 2 for configuration or input problems, 3 for
    /// backend and transport failures, 4 when a metric is undefined.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Backend(_) | Error::Core(genbias_core::Error::Backend { .. }) => 3,
            Error::Core(genbias_core::Error::Undefined(_)) => 4,
            _ => 2,
        }
    }
}
