use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Core(#[from] precedent_core::Error),
    #[error("{what} not found at {path}; {hint}")]
    MissingArtifact {
        what: &'static str,
        path: String,
        hint: &'static str,
    },
    #[error("store {0} is locked by another command")]
    Locked(String),
    #[error("{0}")]
    Usage(String),
    #[error("artifacts disagree: {0}")]
    Inconsistent(String),
    #[error("failed to serve: {0}")]
    Serve(#[source] std::io::Error),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
