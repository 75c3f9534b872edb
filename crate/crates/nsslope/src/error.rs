use thiserror::Error;

/// Errors produced by dataset construction, sequence construction and the
/// estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input matrix too small: need at least 2 rows and 2 columns, got {rows}x{cols}")]
    DimensionTooSmall { rows: usize, cols: usize },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("probability must lie strictly in (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),

    #[error("invalid lambda sequence: {0}")]
    InvalidLambda(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("residual sum of squares is numerically zero for column {column}; precision diverges")]
    SingularResidual { column: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
