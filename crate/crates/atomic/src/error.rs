use thiserror::Error;

use crate::qd::Series;

#[derive(Debug, Error)]
pub enum AtomicError {
    /// No defect is tabulated and the Ritz expansion is not valid at `n`.
    #[error("no quantum-defect data for {series} n={n}")]
    DataGap { series: Series, n: u32 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed data file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read data file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, AtomicError>;
