use std::path::PathBuf;

use crate::tracker::Boundary;

/// Everything that can go wrong between reading an image and scoring a mask.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite input value {0}")]
    NonFinite(f64),

    #[error("degenerate decision threshold: region means are equal ({0})")]
    DegenerateThreshold(f64),

    #[error("position ({x:.3}, {y:.3}) is outside the {width}x{height} image")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("region contrast {contrast:.3} is below the floor {floor:.3}")]
    LowContrast { contrast: f64, floor: f64 },

    #[error("boundary did not close within {steps} steps ({} change-points found)", .partial.points.len())]
    NoClosure { steps: usize, partial: Box<Boundary> },

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Empty(&'static str),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
