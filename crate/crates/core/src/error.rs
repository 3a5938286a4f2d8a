//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied a value that violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two arrays that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An index (code id, token id, joint) is outside its valid range.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// A model or codebook was used before it was initialized or trained.
    #[error("not initialized: {0}")]
    Uninitialized(String),

    /// A text or binary file could not be parsed.
    #[error("malformed {section}: {detail}")]
    Format { section: String, detail: String },

    /// A binary artifact carries an unsupported format version.
    #[error("unsupported {kind} format version {found} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    /// A manifest or config references a file that does not exist.
    #[error("missing file referenced by {context}: {}", path.display())]
    MissingFile { context: String, path: PathBuf },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(section: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            section: section.into(),
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Shape(_)
                | Error::OutOfRange(_)
                | Error::Format { .. }
                | Error::Version { .. }
                | Error::MissingFile { .. }
        )
    }
}
