use thiserror::Error;

use crate::rational::Q;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A point, map or index does not belong to the object it was used with.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input violates a structural precondition (descent, homogeneity, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The admissible-delta inequality failed; `bound` is the strict upper bound.
    #[error("delta = {delta} is not admissible: delta must be < {bound}")]
    DeltaBound { delta: Box<Q>, bound: Box<Q> },
    #[error("not a delta-approximation: gap of length {length} exceeds delta = {delta}")]
    NotDeltaApproximation { length: Box<Q>, delta: Box<Q> },
    #[error("anchor not found: {0}")]
    AnchorNotFound(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("arrows are not composable: {0}")]
    Composition(String),
    #[error("perturbation infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
