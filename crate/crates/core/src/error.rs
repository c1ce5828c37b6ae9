use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration text. `key` names the offending entry.
    #[error("parse error at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("size error: {what} needs {size} spins, cap is {cap}")]
    Size {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A protocol invariant failed during a run; `name` identifies which one.
    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid site: {0}")]
    InvalidSite(String),

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            name,
            detail: detail.into(),
        }
    }
}
