use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("only one class present in labels")]
    SingleClass,
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("cannot build {folds} patient-disjoint folds from {patients} patients")]
    Fold { folds: usize, patients: usize },
    #[error("patient leakage: {0}")]
    Leakage(String),
    #[error("split failed: {0}")]
    Split(String),
    #[error("evaluation set is empty")]
    EmptyEvaluation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }
}
