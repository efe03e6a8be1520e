use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside an operation's domain (bad shapes, indices, empty sets, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// NaN/Inf encountered or an iterative method failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed on-disk data. `offset` is the byte offset where decoding failed,
    /// when known.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    /// Structurally valid document with inconsistent content (checkpoints, configs).
    #[error("invalid document: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported architecture: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}

/// Fails with a numeric error if any value is NaN or infinite.
pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::numeric(format!(
            "{what}: non-finite value {} at index {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}
