use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the model, sampler and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("invalid (n, k) = ({n}, {k}): {reason}")]
    Domain { n: usize, k: usize, reason: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exhaustive enumeration refused for n = {n} (cap {cap})")]
    EnumerationCap { n: usize, cap: usize },

    #[error("edge count {m} infeasible for n = {n}, k = {k} (max {max})")]
    InfeasibleEdgeCount { n: usize, k: usize, m: usize, max: u64 },

    #[error("rejection budget exhausted after {attempts} attempts")]
    RejectionBudget { attempts: u64 },

    #[error("graph lies outside the support: degeneracy {degeneracy} > k = {k}")]
    OutsideSupport { degeneracy: usize, k: usize },

    #[error("statistic vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input")]
    Empty,

    #[error("perfect separation in pseudo-likelihood fit; fall back to the edges-only estimate")]
    Separation,

    #[error("singular covariance; collinear statistics: {0:?}")]
    SingularCovariance(Vec<String>),

    #[error("maximum likelihood estimate does not exist (observed statistic on the polytope boundary)")]
    MleDoesNotExist,

    #[error("did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
