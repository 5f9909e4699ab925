use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An instance or configuration field failed validation.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("no path between `{from}` and `{to}`")]
    Unreachable { from: String, to: String },

    /// Malformed text input. `line` is 1-based, 0 when not applicable.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A value that parsed correctly but is not usable (non-integral binary,
    /// out-of-bounds value, ...).
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("search space of {size:e} points exceeds the limit of {limit:e}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
