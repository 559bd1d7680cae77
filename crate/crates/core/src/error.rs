use thiserror::Error;

/// Errors raised by the geometry, surrogate and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("need at least {needed} interpolation points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("interpolation set is not poised for a linear tail (rank {rank} < {needed})")]
    IllPoised { rank: usize, needed: usize },

    #[error("linear system is numerically singular")]
    Singular,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
