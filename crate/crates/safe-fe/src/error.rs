//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot parse cell at row {row}, column {column}: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("column {0} has no observed values to impute from")]
    AllMissingColumn(String),

    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),

    #[error("label column {column} has non-binary value {value} at row {row}")]
    NonBinaryLabel {
        column: String,
        row: usize,
        value: String,
    },

    #[error("labels contain a single class only")]
    SingleClassLabels,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vectors have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("feature {0} required by the plan is missing from the dataset")]
    MissingFeature(String),

    #[error("unknown operator in plan: {0}")]
    UnknownOperator(String),

    #[error("plan format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("malformed plan document: {0}")]
    MalformedPlan(String),
}
