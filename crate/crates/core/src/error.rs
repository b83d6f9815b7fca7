use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("graph has {nodes} window nodes, brute-force cap is {cap}")]
    SizeCap { nodes: usize, cap: usize },

    #[error("model generation failed: {0}")]
    GenerationFailure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
