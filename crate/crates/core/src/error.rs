use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation, analysis and audio pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n_qubits} outside supported range 1..={max}")]
    Capacity { n_qubits: usize, max: usize },

    #[error("length {len} is not a power of two")]
    NotPowerOfTwo { len: usize },

    #[error("window is degenerate (zero vector after encoding)")]
    DegenerateWindow,

    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("gate needs two distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("series of length {len} is too short (need at least {needed})")]
    TooShort { len: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
