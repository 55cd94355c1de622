use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A value outside the domain of a formula (e.g. log of zero).
    #[error("domain error: {0}")]
    Domain(String),

    /// Pattern synthesis produced zero radiated power and cannot be normalized.
    #[error("degenerate pattern: {0}")]
    DegeneratePattern(String),

    /// A pattern file could not be parsed or failed validation.
    #[error("pattern file {}: {message}", path.display())]
    PatternFormat { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    /// A figure or diagnosis needed a scenario that is not in the result set.
    #[error("missing scenario {0}")]
    MissingScenario(String),

    #[error("I/O error on {}: {source}", path.display())]
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

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
