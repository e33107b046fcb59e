use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is out of its admissible range (bad `p`, bad config, bad weights).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input violates a structural precondition, e.g. a non-symmetric matrix handed to the
    /// symmetric eigensolver.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The eigenvalue gap is too small for the first-order eigenpair update.
    #[error("degenerate spectrum: minimum eigenvalue gap {gap:e} is below threshold {threshold:e}")]
    Degenerate { gap: f64, threshold: f64 },

    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 1,
            Error::Contract(_) | Error::Parse { .. } | Error::EmptyData(_) | Error::Io { .. } => 2,
            Error::Numerical(_) | Error::Degenerate { .. } => 3,
        }
    }
}
