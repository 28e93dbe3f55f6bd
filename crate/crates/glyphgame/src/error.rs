//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors surfaced by any glyphgame component.
///
/// The CLI maps `Config`, `InvalidInput`, `Parse`, and `VersionMismatch`
/// to exit code 2 (usage / configuration); everything else is a runtime
/// failure (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::VersionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
