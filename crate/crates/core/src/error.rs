use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("state error: {0}")]
    State(String),

    #[error("infeasible target: labeling of length {target_len} needs at least {required} frames, got {available}")]
    InfeasibleTarget {
        target_len: usize,
        required: usize,
        available: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown gloss {0:?}")]
    UnknownGloss(String),

    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("all training samples are infeasible for CTC")]
    NoFeasibleSamples,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the contents of input files rather than by
    /// the program state or arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config(_)
                | Error::Schema(_)
                | Error::Input(_)
                | Error::UnknownGloss(_)
                | Error::DuplicateId(_)
                | Error::Io { .. }
                | Error::Format(_)
                | Error::VersionMismatch { .. }
                | Error::Truncated(_)
                | Error::ConfigMismatch(_)
                | Error::VocabularyMismatch(_)
                | Error::UndefinedMetric(_)
                | Error::InfeasibleTarget { .. }
                | Error::NoFeasibleSamples
        )
    }
}
