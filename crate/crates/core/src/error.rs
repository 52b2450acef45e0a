use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^dag| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (max |U^dag U - I| = {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("completeness relation violated: max |sum M_k^dag M_k - I| = {residual:.3e}")]
    Completeness { residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("outcome {outcome} has probability {probability:.3e}; cannot condition on it")]
    DegenerateConditioning { outcome: usize, probability: f64 },

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measurement is not asymptotically DPC: every canonical factor is scalar")]
    NotDpc,

    #[error("two-outcome measurement cannot be brought to the singular diagonal form (alphas {alphas:?}, betas {betas:?})")]
    FormMismatch { alphas: Vec<f64>, betas: Vec<f64> },

    #[error("operator {outcome} is not a scalar multiple of a unitary")]
    NotScalarUnitary { outcome: usize },

    #[error("target state is not stabilizable by feedback for this measurement")]
    Infeasible,

    #[error("feedback plan exhausted: {available} steps available, {requested} requested")]
    PlanExhausted { available: usize, requested: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("internal error: {0}")]
    Internal(String),
}
