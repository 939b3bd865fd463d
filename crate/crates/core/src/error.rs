use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("vocabulary alignment error: {0}")]
    Alignment(String),

    #[error("corrupted payload: {0}")]
    Corrupt(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("lookup error: no entry for `{0}`")]
    Lookup(String),

    #[error("`{word}` is not in the vocabulary")]
    OutOfVocabulary { word: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("example {id}: {source}")]
    Instance {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Attach an example id to an error raised while processing that example.
    pub fn for_instance(self, id: &str) -> Self {
        match self {
            e @ Error::Instance { .. } => e,
            e => Error::Instance {
                id: id.to_string(),
                source: Box::new(e),
            },
        }
    }
}
