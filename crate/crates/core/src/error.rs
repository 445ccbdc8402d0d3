use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("expected 25 keypoint slots, got {0}")]
    LengthMismatch(usize),

    #[error("negative timestamp: {0} ms")]
    NegativeTime(f64),

    #[error("invalid keypoint in slot {slot}: {reason}")]
    InvalidKeypoint { slot: usize, reason: String },

    #[error("malformed frame file: {0}")]
    MalformedFile(String),

    #[error("person {person}: keypoint array has {len} values, expected 75")]
    BadTripleCount { person: usize, len: usize },

    #[error("zero-length vector")]
    ZeroVector,

    #[error("smoothing window must be odd and >= 1, got {0}")]
    BadWindow(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid script: {0}")]
    InvalidScript(String),

    #[error("no input frames found in {0}")]
    NoInput(PathBuf),

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_file(path: impl Into<PathBuf>, source: Error) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
