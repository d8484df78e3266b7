//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "corrupt input {path}: {malformed} of {total} lines failed to parse; first offenders: {samples:?}"
    )]
    CorruptInput {
        path: PathBuf,
        total: usize,
        malformed: usize,
        samples: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("screen-name corpus is empty")]
    EmptyCorpus,

    #[error("[{stage}] {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
