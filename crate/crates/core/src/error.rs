use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    /// Gram matrix of a zero-forcing solve is singular or too ill-conditioned.
    #[error("singular channel matrix (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    /// Local ZF needs strictly more antennas than distributed users.
    #[error("distributed group of {k_d} users needs more than {antennas} antennas per AP")]
    DistributedGroupTooLarge { k_d: usize, antennas: usize },

    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,

    #[error("{skipped} of {total} Monte Carlo draws were singular")]
    TooManySingularDraws { skipped: usize, total: usize },

    #[error("conic solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
