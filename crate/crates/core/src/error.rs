use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is degenerate (coplanar, collinear or too small)")]
    DegenerateCloud,

    #[error("surface sampling requested {requested} spheres but no surface points were given")]
    EmptySurface { requested: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory planning needs at least 2 input cameras, got {got}")]
    InsufficientInputCameras { got: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("oracle needs ground-truth views but none were supplied")]
    MissingGroundTruth,

    #[error("repair oracle failed: {0}")]
    Oracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Short machine-readable code, used by the CLI error envelope.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateCloud => "degenerate_cloud",
            Error::EmptySurface { .. } => "empty_surface",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InsufficientInputCameras { .. } => "insufficient_input_cameras",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MissingGroundTruth => "missing_ground_truth",
            Error::Oracle(_) => "oracle_failure",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
