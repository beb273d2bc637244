use thiserror::Error;

/// Errors surfaced by graph construction, operator assembly and solver runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected: lambda2 is zero")]
    Disconnected,

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("preconditioner is not positive definite: {0}")]
    IndefinitePreconditioner(String),

    #[error("divergence at iteration {iteration}: non-finite value in {block}")]
    Divergence { iteration: u64, block: &'static str },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: u64,
        residual: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Slater witness rejected: {0}")]
    InfeasibleWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
