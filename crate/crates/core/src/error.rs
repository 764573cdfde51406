use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("transported support [{lo:.6}, {hi:.6}] leaves the spatial domain [{x_lo}, {x_hi}]")]
    DomainViolation { lo: f64, hi: f64, x_lo: f64, x_hi: f64 },

    #[error("density below threshold at every grid point of time level {level}")]
    DegenerateDensity { level: usize },

    #[error("non-finite value at {node}")]
    NonFinite { node: String },

    #[error("loss diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },

    #[error("checkpoint {path}: unsupported format version {found} (expected {expected})")]
    CheckpointVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("checkpoint {path}: corrupt file ({reason})")]
    CheckpointCorrupt { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
