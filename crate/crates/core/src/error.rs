use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("batch error: {0}")]
    Batch(String),

    #[error("network config error: {0}")]
    Config(String),

    #[error("weight import failed for {} tensor(s) [{}]: {reason}", names.len(), preview(names))]
    Import { names: Vec<String>, reason: String },

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Image(String),
}

/// First few names, so a wholesale mismatch stays one readable line.
fn preview(names: &[String]) -> String {
    const SHOWN: usize = 3;
    let mut out = names[..names.len().min(SHOWN)].join(", ");
    if names.len() > SHOWN {
        out.push_str(&format!(", ... {} more", names.len() - SHOWN));
    }
    out
}

impl Error {
    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }
}
