//! Error type shared by every module.

use std::path::PathBuf;

/// Failures raised by builders, estimators and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero coefficient vector")]
    ZeroCoefficients,
    #[error("empty coefficient vector")]
    EmptyCoefficients,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("register needs {needed} qubits but the simulator supports at most {limit}")]
    WidthOverflow { needed: usize, limit: usize },
    #[error("qubit {qubit} out of range for a {width}-qubit register")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("qubit {0} appears more than once among targets and controls")]
    OverlappingQubits(usize),
    #[error("circuit width {circuit} does not match state width {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::WidthOverflow { .. } | Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
