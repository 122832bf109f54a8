//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Violation;

/// Errors produced by corpus I/O, model fitting, training, extraction, and
/// the generation client.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON line: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("validation failed: {0}")]
    Validation(Violation),

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("unknown document id {0:?}")]
    UnknownDocId(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("class {class} does not appear in the labels")]
    AbsentClass { class: usize },

    #[error("label {label:?} has no positive examples")]
    AbsentLabel { label: String },

    #[error("class {class} has a single sample; oversampling needs at least 2")]
    SingletonClass { class: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("inconsistent input lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("duplicate ensemble seed {0}")]
    DuplicateSeed(u64),

    #[error("ensemble members disagree on {0}")]
    EnsembleMismatch(&'static str),

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("training aborted at epoch {epoch}: non-finite loss {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("rule {id:?}: {message}")]
    RulePattern { id: String, message: String },

    #[error("duplicate rule id {0:?}")]
    DuplicateRuleId(String),

    #[error("model file {path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("prompt template has an empty topic rotation")]
    EmptyTopicRotation,

    #[error("prompt template has no constraints")]
    EmptyConstraints,

    #[error("generation auth variable {0:?} is not set")]
    MissingAuth(String),

    #[error("generation request failed with status {status}: {body}")]
    GenerationStatus { status: u16, body: String },

    #[error("generation response could not be parsed: {0}")]
    GenerationParse(String),

    #[error("generation retries exhausted after {attempts} attempts: {message}")]
    RetriesExhausted { attempts: u32, message: String },

    #[error("augmentation record was not accepted (reason: {reason})")]
    RecordNotAccepted { reason: String },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
