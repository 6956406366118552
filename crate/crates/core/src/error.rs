use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty: {0}")]
    EmptyInput(String),

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid fold configuration: {0}")]
    Folds(String),

    #[error("fold index {index} out of range 0..={n}")]
    FoldIndex { index: usize, n: usize },

    #[error("outcome {outcome} out of range for a test of arity {arity}")]
    OutcomeOutOfRange { outcome: usize, arity: usize },

    #[error("statistics shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("statistics are empty (total count 0)")]
    EmptyStatistics,

    #[error("measure `{measure}` cannot be used with a {target} target")]
    MeasureMismatch {
        measure: &'static str,
        target: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("example does not match the schema: {0}")]
    SchemaMismatch(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
