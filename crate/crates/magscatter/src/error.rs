//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MagError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains NaN")]
    NanField,
    #[error("Born series diverges: {0}")]
    Divergence(String),
    #[error("linear solver did not converge: best residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("solution not converged (linear residual {0:.3e})")]
    Unconverged(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, MagError>;
