use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at node {index} (x = {point:?})")]
    NonFinite { index: usize, point: [f64; 3] },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("ellipticity violated: measured constant {measured} exceeds declared {declared} at x = {point:?}")]
    Ellipticity {
        measured: f64,
        declared: f64,
        point: [f64; 3],
    },

    #[error("coefficient matrix is not symmetric at node {0}")]
    Asymmetric(usize),

    #[error("empty shell at radius {radius} (half-width {half_width})")]
    EmptyShell { radius: f64, half_width: f64 },

    #[error("linear solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("Krylov breakdown: {0}")]
    KrylovBreakdown(String),

    #[error("time step {dt} violates the stability bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("guard violated: {0}")]
    Guard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
