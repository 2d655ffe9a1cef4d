use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or inconsistent input data.
    #[error("{0}")]
    Invalid(String),

    /// A numeric routine could not produce a meaningful value.
    #[error("{0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Short machine-readable category used on the command line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Read { .. } | Error::Invalid(_) => "validation",
            Error::Write { .. } => "io",
            Error::Numeric(_) => "numeric",
        }
    }

    /// Process exit code: 2 for bad input, 3 for runtime or numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Read { .. } | Error::Invalid(_) => 2,
            Error::Write { .. } | Error::Numeric(_) => 3,
        }
    }
}
