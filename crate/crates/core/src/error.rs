use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation, reconstruction and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("coverage gap over detector columns [{start}, {end})")]
    Coverage { start: i64, end: i64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
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

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Format { .. } => "format",
            Error::Coverage { .. } => "coverage",
            Error::Degenerate(_) => "degenerate",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
