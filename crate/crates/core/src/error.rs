use thiserror::Error;

/// Errors produced by construction, validation, and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Constraints that no density matrix can satisfy, or targets sitting on
    /// the boundary of the feasible set in a way the dual cannot represent.
    #[error("infeasible or boundary constraints: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A state was supplied that does not reproduce the constraint targets
    /// its maximum-entropy assignment was solved under.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
