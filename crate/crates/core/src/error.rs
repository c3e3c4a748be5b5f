use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("duplicate precedent id {0}")]
    DuplicatePrecedentId(u32),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid pattern {pattern:?}: {message}")]
    Pattern { pattern: String, message: String },

    #[error("class {class} has {available} documents, {required} required")]
    ClassTooSmall {
        class: u32,
        available: usize,
        required: usize,
    },

    #[error("class {0} has no positive examples")]
    NoPositives(u32),

    #[error("class {0} has no negative examples")]
    NoNegatives(u32),

    #[error("empty vocabulary after applying min_df = {0}")]
    EmptyVocabulary(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fingerprint mismatch: classifier built on {expected}, pipeline is {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    #[error("singular surrogate system; use ridge_lambda > 0")]
    SingularSystem,

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
