use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed block: {message}")]
    Parse { line: usize, message: String },

    #[error("block {height}: invalid `{field}`: {message}")]
    Validation {
        height: u64,
        field: &'static str,
        message: String,
    },

    #[error("duplicate txid `{0}`")]
    DuplicateTxid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown address `{0}`")]
    UnknownAddress(String),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("shape mismatch: expected width {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("cannot rank features: {0}")]
    Ranking(String),

    #[error("unknown feature id `{0}`")]
    UnknownFeature(String),

    #[error("bad table: {0}")]
    Table(String),

    #[error("bad snapshot: {0}")]
    Snapshot(String),

    #[error("labels file line {line}: {message}")]
    Labels { line: usize, message: String },

    #[error("cannot open `{path}`")]
    Open { path: String, source: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Validation,
    Compute,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Labels { .. }
            | Error::Config(_)
            | Error::UnknownAddress(_)
            | Error::UnknownNode(_)
            | Error::UnknownFeature(_)
            | Error::Snapshot(_)
            | Error::Open { .. }
            | Error::Table(_) => ErrorClass::Input,
            Error::Validation { .. } | Error::DuplicateTxid(_) => ErrorClass::Validation,
            Error::Convergence { .. }
            | Error::Shape { .. }
            | Error::LengthMismatch(..)
            | Error::Split(_)
            | Error::Ranking(_) => ErrorClass::Compute,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ErrorClass::Io,
        }
    }
}

impl Error {
    pub fn open(path: impl AsRef<std::path::Path>, source: io::Error) -> Error {
        Error::Open {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl ErrorClass {
    /// Process exit code for this class. Success is 0.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Compute => 4,
            ErrorClass::Io => 5,
        }
    }
}
