use thiserror::Error;

/// Errors produced by configuration, kernel and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A singular kernel was evaluated at a lattice point.
    #[error("kernel singularity: {0}")]
    Singularity(String),

    /// Points `i` and `j` coincide on the torus.
    #[error("coincident points {i} and {j}")]
    CoincidentPoints { i: usize, j: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
