use std::path::PathBuf;

/// Broad failure class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Convergence,
    Config,
}

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV input: {0}")]
    Csv(String),
    #[error("malformed JSON input: {0}")]
    Json(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("timestamps are not on a regular 10-minute grid at row {row}")]
    IrregularTimestamps { row: usize },
    #[error("missing value in column `{column}` at the {position} of the series cannot be interpolated")]
    UnfillableGap { column: &'static str, position: &'static str },
    #[error("{fraction:.4} of the `{column}` cells are missing, above the {cap:.4} cap")]
    DataQuality {
        column: &'static str,
        fraction: f64,
        cap: f64,
    },
    #[error("series has {available} rows but {required} are required")]
    InsufficientData { required: usize, available: usize },
    #[error("{0}")]
    OutOfRange(String),
    #[error("non-finite value in {0}")]
    NumericalInput(&'static str),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("simulation exploded at step {step} (spectral radius of the constant AR part: {spectral_radius:.4})")]
    Explosive { step: usize, spectral_radius: f64 },
    #[error("estimation did not converge after {iterations} iterations (last delta {last_delta:.3e})")]
    NotConverged { iterations: usize, last_delta: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Explosive { .. } | Error::NotConverged { .. } | Error::Degenerate(_) => {
                ErrorKind::Convergence
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
