use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unsupported quadrature order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("boundary region selects no boundary faces")]
    EmptySelection,
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid network architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidTrainConfig(String),
    #[error("training aborted at iteration {iteration}: {reason}")]
    TrainingAborted { iteration: usize, reason: String },
    #[error("invalid boundary conditions: {0}")]
    InvalidBoundary(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("MMA subproblem infeasible: {0}")]
    Infeasible(String),
    #[error("invalid optimization config: {0}")]
    InvalidConfig(String),
    #[error("forward solve failed at optimization iteration {iteration}: {source}")]
    ForwardSolve {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
