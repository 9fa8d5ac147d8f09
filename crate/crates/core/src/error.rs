use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cell index {index} out of range (network has {count} cells)")]
    InvalidCell { index: usize, count: usize },

    #[error("demand of {demand} bit/s cannot be met at zero SINR")]
    InfeasibleDemand { demand: f64 },

    #[error("no active cell can serve the UE")]
    NoCoverage,

    #[error("all cells are inactive")]
    NoActiveCells,

    #[error("illegal action: {0}")]
    IllegalAction(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite gradient in parameter {index} during update")]
    NonFiniteGradient { index: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },

    #[error("checkpoint version mismatch: expected {expected}, found {found}")]
    CheckpointVersion { expected: u32, found: String },

    #[error("checkpoint parameter count mismatch: declared {declared}, found {found}")]
    CheckpointCount { declared: usize, found: usize },

    #[error("corrupted checkpoint: {0}")]
    CheckpointCorrupted(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data (config, CSV, checkpoint files)
    /// rather than a failure while running.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidCell { .. }
                | Error::DimensionMismatch { .. }
                | Error::Schema(_)
                | Error::Row { .. }
                | Error::CheckpointVersion { .. }
                | Error::CheckpointCount { .. }
                | Error::CheckpointCorrupted(_)
        )
    }
}
