use rydex_atomic::AtomicError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DATA_GAP: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("atomic data gap: {0}")]
    DataGap(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::DataGap(_) => EXIT_DATA_GAP,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<rydex_core::Error> for CliError {
    fn from(e: rydex_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AtomicError> for CliError {
    fn from(e: AtomicError) -> Self {
        match e {
            AtomicError::DataGap { .. } => CliError::DataGap(e.to_string()),
            AtomicError::Parameter(_) => CliError::Usage(e.to_string()),
            AtomicError::Quadrature(_) => CliError::Numerical(e.to_string()),
            AtomicError::Parse { .. } | AtomicError::Io { .. } => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Rejects NaN or infinite results.
pub fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Numerical(format!("{name} is not finite ({v})")))
    }
}
