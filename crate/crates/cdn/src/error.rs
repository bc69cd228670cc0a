//! Error types shared across the toolkit.
//!
//! Every error carries a stable category string so the CLI can map failures
//! to machine-readable exit codes.

use std::path::PathBuf;

/// Top-level error for all toolkit operations.
#[derive(Debug, thiserror::Error)]
pub enum CdnError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch in {op}: {details}")]
    Shape { op: &'static str, details: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("training aborted: {0}")]
    Training(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CdnError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CdnError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable category label used in CLI error output and exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            CdnError::Config(_) => "config",
            CdnError::Data(_) | CdnError::Parse { .. } => "data",
            CdnError::Shape { .. } | CdnError::Numeric(_) => "numeric",
            CdnError::Model(_) => "model",
            CdnError::Training(_) => "training",
            CdnError::Checkpoint(_) | CdnError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "data" => 4,
            "numeric" => 5,
            "model" => 6,
            "training" => 7,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CdnError>;
