use thiserror::Error;

/// Errors produced by the discrimination toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("count mismatch: {what} expected {expected}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (residual {residual:e} > {tol:e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("trace has imaginary residual {0:e}")]
    ComplexTrace(f64),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("member {index} is not a pure state: {detail}")]
    NotPure { index: usize, detail: String },

    #[error("member {index} is not maximally mixed (deviation {deviation:e})")]
    NotMaximallyMixed { index: usize, deviation: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("simulation aborted: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
