use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("data file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric value {value:?} at row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("{0} missing or non-finite cells")]
    MissingValues(usize),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("expected provenance `{expected}`, got `{got}`")]
    WrongProvenance { expected: String, got: String },
    #[error("column count mismatch: expected {expected}, got {got}")]
    ColumnCountMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("rank deficient: requested {requested} components, only {available} available")]
    RankDeficient { requested: usize, available: usize },

    #[error("component count {requested} out of range 1..={max}")]
    BadComponentCount { requested: usize, max: usize },
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data has a single class")]
    SingleClassTraining,
    #[error("non-finite value in input row {0}")]
    NonFiniteInput(usize),

    #[error("class `{0}` has too few instances to split")]
    ClassTooSmall(String),
    #[error("invalid fold count {0}")]
    BadK(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unsupported artifact: {0}")]
    BadArtifact(String),

    #[error("{form}/{model}: {source}")]
    Cell {
        form: String,
        model: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{form}: {source}")]
    Form {
        form: String,
        #[source]
        source: Box<Error>,
    },
}
