//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by data loading, model fitting, and explanation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("{path}: row {row}, column {column:?}: cannot parse {value:?} as a finite number")]
    BadCell {
        path: String,
        /// 1-based data row (header excluded).
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),

    #[error("{path}: fewer than 2 rows")]
    TooFewRows { path: String },

    #[error("label {0:?} does not occur in the data")]
    LabelNotFound(String),

    #[error("positive and negative labels are both {0:?}")]
    IdenticalClassLabels(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {class} has {size} rows, fewer than {k} folds")]
    ClassSmallerThanFolds { class: u8, k: usize, size: usize },

    #[error("duplicate signal feature index {0}")]
    DuplicateSignalIndex(usize),

    #[error("signal feature index {index} out of range for {n_features} features")]
    SignalIndexOutOfRange { index: usize, n_features: usize },

    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot write {path}: {source}")]
    WriteFailed {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file {path}: {message}")]
    BadModelFile { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
