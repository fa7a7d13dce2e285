use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate histogram: fewer than two populated gray levels")]
    DegenerateHistogram,

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("manual border mask has no foreground pixels")]
    EmptyManualBorder,

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("ensemble must contain at least one method")]
    EmptyEnsemble,

    #[error("unknown thresholding method '{0}'")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("degenerate manual border: {0}")]
    DegenerateBorder(String),

    #[error("no evaluation rows to aggregate")]
    EmptyReport,

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::DegenerateHistogram | Error::EmptyMask => 4,
            Error::UnknownMethod(_) | Error::InvalidConfig(_) => 2,
            _ => 3,
        }
    }
}
