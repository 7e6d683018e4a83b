use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: invalid field `{field}`: {message}")]
    Record {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: duplicate question id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing feature `{0}`")]
    MissingFeature(String),

    #[error("schema mismatch on field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:.3e}, objective {objective:.6})")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        objective: f64,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("unsupported document version {found} (expected {expected}) in {kind}")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("unavailable: {0}")]
    Unavailable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
