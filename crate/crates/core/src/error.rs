use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("document {id} is empty after preprocessing")]
    EmptyAfterPreprocessing { id: String },

    /// Retriable network failure. `cursor` is the result offset of the page
    /// that failed, so a caller can resume from there.
    #[error("network error at page cursor {cursor}: {message}")]
    Network { cursor: usize, message: String },

    #[error("malformed response for record {record}: {message}")]
    Parse { record: String, message: String },

    #[error("sampler integrity violated: {0}")]
    Integrity(String),

    #[error("unknown topic node {epoch}:{topic_id}")]
    UnknownNode { epoch: usize, topic_id: usize },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// Process exit code for the CLI: 1 validation, 2 runtime stage
    /// failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidInput(_) => 1,
            Error::Io { .. } => 3,
            Error::Stage { source, .. } => match source.as_ref() {
                Error::Io { .. } => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}
