use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("agent {0} cannot be the truth: it has outgoing edges")]
    InvalidTruth(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires a fixed or periodic sequence")]
    UnsupportedSequence,

    #[error("time {t} is past the end of an explicit sequence of length {len}")]
    OutOfRange { t: u64, len: usize },

    #[error("learner {0} has zero out-degree")]
    SingularDegree(usize),

    #[error("unsupported analysis: {0}")]
    UnsupportedAnalysis(String),

    #[error("cannot fit a rate: {0}")]
    Unfittable(String),

    #[error("mapping undefined: {0}")]
    MappingUndefined(String),

    #[error("{}:{line}: {msg}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the error stems from bad user input rather than a failure while
    /// running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
