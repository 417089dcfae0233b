use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DacError> = std::result::Result<T, E>;

/// Broad failure classes, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum DacError {
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}: non-finite value")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("forward cache does not belong to this model state")]
    StaleCache,

    #[error(
        "{path}: bad IDX magic at offset {offset}: expected {expected:#010x}, found {found:#010x}"
    )]
    IdxBadMagic {
        path: PathBuf,
        offset: u64,
        expected: u32,
        found: u32,
    },
    #[error(
        "{path}: truncated IDX file at offset {offset}: need {needed} bytes, {available} available"
    )]
    IdxTruncated {
        path: PathBuf,
        offset: u64,
        needed: u64,
        available: u64,
    },
    #[error("IDX item count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("{path}:{line}: ragged row ({found} columns, expected {expected})")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: cannot parse {token:?} as a number")]
    NonNumericToken {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("row count mismatch: {features} feature rows vs {labels} labels")]
    RowCountMismatch { features: usize, labels: usize },
    #[error("{path}:{line}: label {label} outside 1..={max}")]
    LabelOutOfRange {
        path: PathBuf,
        line: usize,
        label: i64,
        max: i64,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("missing artifact {0} (run training first)")]
    MissingArtifact(PathBuf),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DacError {
    pub fn category(&self) -> ErrorCategory {
        use DacError::*;
        match self {
            NonFinite(_) | NonFiniteLoss { .. } => ErrorCategory::Numeric,
            DimensionMismatch { .. } | InvalidArgument(_) | StaleCache | Config { .. } => {
                ErrorCategory::Usage
            }
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DacError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        DacError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
