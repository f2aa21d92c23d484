use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine. Each variant maps onto one process exit code
/// so that batch drivers can tell configuration problems from data problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("numerical failure in {update}: {message}")]
    Numerical { update: String, message: String },

    #[error("check failed: {0}")]
    Check(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code contract: 0 success, 1 config, 2 data, 3 numerical, 4 check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Numerical { .. } => 3,
            Error::Check(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
