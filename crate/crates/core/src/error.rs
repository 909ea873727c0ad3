use std::io;

use thiserror::Error;

use crate::corpus::ErrorType;

pub type Result<T> = std::result::Result<T, GedError>;

#[derive(Debug, Error)]
pub enum GedError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid sentence {id}: {reason}")]
    InvalidSentence { id: String, reason: String },

    #[error("label {label:?} is not part of the {scheme} scheme")]
    LabelOutsideScheme { label: String, scheme: String },

    #[error("sentences do not share one label scheme")]
    MixedSchemes,

    #[error("injection site is stale for sentence {0}")]
    StaleSite(String),

    #[error("not enough material for {error_type}: need {needed} more {pool} sentences")]
    InsufficientMaterial {
        error_type: String,
        pool: String,
        needed: usize,
    },

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    #[error("ladder size {size} exceeds the {available} available training sentences")]
    LadderTooLarge { size: usize, available: usize },

    #[error("corpus of {0} sentences is too small to split")]
    CorpusTooSmall(usize),

    #[error("prediction and gold are misaligned at {id}: {reason}")]
    Misaligned { id: String, reason: String },

    #[error("no runs to aggregate")]
    EmptyRuns,

    #[error("no development reports to choose an epoch from")]
    NoEpochs,

    #[error("curve points are not sorted by training size")]
    UnsortedCurve,

    #[error("training data is empty")]
    EmptyTrainingData,

    #[error("no feedback template for {0}")]
    MissingTemplate(ErrorType),

    #[error("{0}")]
    Contract(String),
}
