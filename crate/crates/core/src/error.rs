use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal of length {len} (padding {padding}) is shorter than the kernel receptive field of {field} samples")]
    SignalTooShort {
        len: usize,
        padding: usize,
        field: usize,
    },

    #[error("subcarrier {subcarrier}, kernel {kernel}")]
    Transform {
        subcarrier: usize,
        kernel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("class {0} has no training samples")]
    EmptyClass(usize),

    #[error("feature vector has length {actual}, model expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("input has {actual} subcarriers, model expects {expected}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("{path}: non-finite value at row {row}, column {column}")]
    NonFiniteInput {
        path: PathBuf,
        row: usize,
        column: usize,
    },

    #[error("no samples loaded from {0}")]
    NoSamples(PathBuf),

    #[error("class '{class}' has {count} samples, fewer than the {folds} folds requested")]
    TooFewSamples {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("{what}: unsupported format version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: msg.into(),
        }
    }
}
