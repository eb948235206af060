use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("potential coefficients are not conjugate-symmetric at index {index:?}")]
    NonHermitianPotential { index: Vec<i32> },

    #[error("band {band} is not simple (relative gap {gap:.3e})")]
    DegenerateBand { band: usize, gap: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("Hessian asymmetry {0:.3e} exceeds tolerance")]
    AsymmetricHessian(f64),

    #[error("box length {length} is not an integer multiple of eps = {eps}")]
    Commensurability { length: f64, eps: f64 },

    #[error("grid resolves only {points_per_cell:.2} points per lattice cell (need at least {required})")]
    Resolution { points_per_cell: f64, required: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("blow-up detected at t = {time}: sup norm grew by a factor {growth:.3e}")]
    BlowUpDetected { time: f64, growth: f64 },

    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    #[error("effective mass tensor is not elliptic (smallest eigenvalue {0:.3e})")]
    NotElliptic(f64),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}
