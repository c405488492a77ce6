use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("outcome {outcome} has probability {prob:e} below floor {floor:e}")]
    ProbabilityBelowFloor { outcome: usize, prob: f64, floor: f64 },

    #[error("outcome index {0} out of range")]
    NoSuchOutcome(usize),

    #[error("instrument is not efficient (outcome {0} has several Kraus operators)")]
    NotEfficient(usize),

    #[error("regions are expressed in different frames")]
    FrameMismatch,

    #[error("box is not a spatial box on a single rest plane")]
    NotSpatial,

    #[error("spatial boxes lie on different rest planes (t = {0} vs {1})")]
    DifferentRestPlanes(f64, f64),

    #[error("cell sets overlap")]
    Overlap,

    #[error("cell {cell} out of range for a lattice of {n} cells")]
    CellOutOfRange { cell: usize, n: usize },

    #[error("kernel too small: min eigenvalue {min_eig:e} <= floor {floor:e}; the laboratory effect is not invertible")]
    KernelTooSmall { min_eig: f64, floor: f64 },

    #[error("operator is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("family is not additive on {0}")]
    NotAdditive(String),

    #[error("vacuous bound: delta = {0} >= 1")]
    VacuousBound(f64),

    #[error("gentle measurement precondition violated: tr(rho T) = {0:e}")]
    NonPositiveWeight(f64),

    #[error("frame operator numerically singular (min eigenvalue {0:e})")]
    SingularFrame(f64),

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
