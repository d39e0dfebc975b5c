use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
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

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("event must begin with \"PersonX\": {0:?}")]
    NotPersonX(String),

    #[error("no conjugatable verb found in {0:?}")]
    NoVerb(String),

    #[error("requested k={k} but only {usable} usable vectors")]
    TooFewVectors { k: usize, usable: usize },

    #[error("metric needs at least two non-empty clusters, found {0}")]
    SingleCluster(usize),

    #[error("split sizes {requested} exceed population {population}")]
    SplitOverflow { requested: usize, population: usize },

    #[error("k_eval={k} exceeds number of classes {classes}")]
    KTooLarge { k: usize, classes: usize },

    #[error("user {user} has only {available} differently-labeled competitors, need {needed}")]
    InsufficientCompetitors {
        user: String,
        available: usize,
        needed: usize,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
