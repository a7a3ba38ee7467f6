use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("{what} of {requested} exceeds the configured cap of {limit}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no valid points remain after masking")]
    EmptyValid,

    #[error("need at least {needed} points in the fit window, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("curve {index} never crosses the threshold {threshold}")]
    NonCrossing { index: usize, threshold: f64 },

    #[error("replay parse error on line {line}: {message}")]
    Replay { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Geometry(_) | Error::Replay { .. } => 2,
            Error::CapExceeded { .. } => 3,
            Error::Invariant(_) => 4,
            _ => 1,
        }
    }
}
