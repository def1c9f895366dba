use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid GoP configuration: {0}")]
    InvalidGop(String),

    #[error("policy does not fit the chain: {0}")]
    PolicyMismatch(String),

    /// The delivery constraint cannot be met by any policy.
    #[error("infeasible: minimum delivery rate {delta} cannot be met (phase-1 residual {residual:.3e})")]
    Infeasible { delta: f64, residual: f64 },

    #[error("LP is unbounded")]
    Unbounded,

    #[error("numerical failure in {context}: residual {residual:.3e} exceeds tolerance")]
    NumericalFailure { context: &'static str, residual: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("forced loss at frame {0} does not fall on an I-frame slot")]
    ForcedLossNotIFrame(u64),

    #[error("malformed policy file: {0}")]
    PolicyFile(String),
}
