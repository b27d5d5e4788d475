use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the ingestion, learning and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{0}: recording contains no samples")]
    EmptyRecording(PathBuf),

    #[error("invalid recording: {0}")]
    Validation(String),

    #[error("no matching recordings found in {0}")]
    EmptyDataset(PathBuf),

    #[error("recording too short: {duration_s:.2} s available, {required_s:.2} s required")]
    TooShort { duration_s: f64, required_s: f64 },

    #[error("insufficient gait: {found} valid strides detected, at least {required} required")]
    InsufficientGait { found: usize, required: usize },

    #[error("degenerate gait: {0}")]
    DegenerateGait(String),

    #[error("feature {feature} is constant over the training set (value {value})")]
    DegenerateFeature { feature: String, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
