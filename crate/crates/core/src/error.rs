use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
///
/// The CLI maps the first group (bad input) to exit code 1 and the
/// second group (runtime or numerical failure) to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("range error: {0}")]
    Range(String),
    #[error("undefined result: {0}")]
    Undefined(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("run error (seed {seed}): {message}")]
    Run { seed: u64, message: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
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

    /// True for errors caused by bad user input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Parse { .. } | Error::Format { .. } | Error::Range(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
