use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty batch")]
    EmptyBatch,

    #[error("empty series")]
    EmptySeries,

    #[error("invalid period summary: {0}")]
    InvalidSummary(String),

    #[error("window {k} out of range 1..={t}")]
    WindowOutOfRange { k: usize, t: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model index {index} out of range for {models} models")]
    ModelIndex { index: usize, models: usize },

    #[error("a model cannot be compared with itself (index {0})")]
    SelfComparison(usize),

    #[error("empty model set")]
    EmptyModelSet,

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("invalid loss table: {0}")]
    InvalidLossTable(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{path}: empty file")]
    EmptyFile { path: PathBuf },

    #[error("{path}: non-contiguous periods (expected period {expected}, found {found})")]
    NonContiguousPeriods {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}: {message}")]
    Parse { path: PathBuf, row: usize, message: String },

    #[error("{path}: missing loss for (period {period}, sample {sample}, model {model:?})")]
    MissingLoss {
        path: PathBuf,
        period: usize,
        sample: usize,
        model: String,
    },

    #[error("{path}: duplicate loss for (period {period}, sample {sample}, model {model:?})")]
    DuplicateLoss {
        path: PathBuf,
        period: usize,
        sample: usize,
        model: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// An internal consistency check failed. Indicates a bug rather than bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            message: message.into(),
        }
    }
}
