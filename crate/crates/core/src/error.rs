use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = WmarError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WmarError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("values not nondecreasing at index {index} ({prev} > {next})")]
    NotMonotone { index: usize, prev: f64, next: f64 },

    #[error("value {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("outside logarithmic image: {0}")]
    OutsideLogImage(String),

    #[error("invalid spline: {0}")]
    InvalidSpline(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("gram singular: smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e}")]
    GramSingular {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl WmarError {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            WmarError::InvalidGrid(_) => "invalid_grid",
            WmarError::GridMismatch { .. } => "grid_mismatch",
            WmarError::NotMonotone { .. } => "not_monotone",
            WmarError::OutOfRange { .. } => "out_of_range",
            WmarError::OutsideLogImage(_) => "outside_log_image",
            WmarError::InvalidSpline(_) => "invalid_spline",
            WmarError::InvalidArgument(_) => "invalid_argument",
            WmarError::Empty(_) => "empty",
            WmarError::GramSingular { .. } => "gram_singular",
            WmarError::Format(_) => "format",
            WmarError::Io { .. } => "io",
            WmarError::Csv(_) => "csv",
            WmarError::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WmarError::Io {
            path: path.into(),
            source,
        }
    }
}
