use thiserror::Error;

/// Errors raised by the library.
///
/// Input errors are caller mistakes (bad indices, malformed files, missing
/// data for a mode); numeric errors come from degenerate data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("collinear parent set {parents:?} for child {child}")]
    Collinear { child: usize, parents: Vec<usize> },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for failures caused by the data rather than by how the library
    /// was called.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Collinear { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
