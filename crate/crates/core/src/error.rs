use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration is malformed or violates an invariant. `key` is the dotted key path.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// Input data (e.g. a temperature trace or a prior run directory) is malformed.
    #[error("data error: {0}")]
    Data(String),

    /// The caller asked for something inconsistent.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

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

    /// Process exit code: 2 for config/usage/data problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config { .. } | Error::Data(_) | Error::Usage(_) => 2,
            Error::Io { .. } | Error::Csv { .. } => 3,
        }
    }
}
