use thiserror::Error;

/// Errors produced by design construction, verification and the region solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exhaustive computation hit its evaluation cap. Never a "no" answer.
    #[error("evaluation budget of {budget} exceeded ({context})")]
    BudgetExceeded { budget: u64, context: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("region unknown: {0}")]
    RegionUnknown(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("tail feasibility check failed: {0}")]
    TailCheck(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
