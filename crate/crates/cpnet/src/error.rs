//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by data ingestion, training, and conformal evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad IDX magic {found:#010x}, expected {expected:#010x}")]
    IdxMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: truncated IDX payload (expected {expected} bytes, found {found})")]
    IdxTruncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("column {name:?} not found in header")]
    MissingColumn { name: String },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    BadNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column:?}: missing value")]
    MissingValue { row: usize, column: String },

    #[error("class {class} has {count} samples, too few to stratify")]
    Stratification { class: usize, count: usize },

    #[error("unknown label {label}: dataset has {class_count} classes")]
    UnknownLabel { label: usize, class_count: usize },

    #[error("at least two classes are required, got {0}")]
    DegenerateClassCount(usize),

    #[error("class {class} is absent from the calibration set")]
    CalibrationCoverage { class: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("batch of size {0} is too small for a distribution loss (need >= 2)")]
    BatchTooSmall(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("ensemble member {member}: {source}")]
    EnsembleMember {
        member: usize,
        #[source]
        source: Box<Error>,
    },
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
