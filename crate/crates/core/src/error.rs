use thiserror::Error;

use crate::sdp::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("map is not completely positive (smallest Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("map is not a channel: {0}")]
    NotChannel(String),

    #[error("map has vanishing trace on the identity")]
    ZeroMap,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("semidefinite program ended with status {status:?} (gap {gap:.3e})")]
    Solver { status: SolveStatus, gap: f64 },

    #[error("unknown label {0:?}")]
    LabelUnknown(String),

    #[error("experiments have different label sets: {0}")]
    LabelMismatch(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("payoff table vanishes on the support of the prior")]
    DegeneratePayoff,

    #[error("malformed block structure: {0}")]
    ShapeError(String),

    #[error("states do not span the Hermitian operators (rank {rank} < {needed})")]
    NotSpanning { rank: usize, needed: usize },

    #[error("experiment is not complete (rank {rank} < {needed})")]
    NotComplete { rank: usize, needed: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
