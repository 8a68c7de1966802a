use nalgebra::DVector;
use thiserror::Error;

use crate::scalar::Real;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {range}")]
    Parameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("problem `{0}` provides no Jacobian or Hessian")]
    MissingJacobian(String),
    #[error("line search requires objective: {0}")]
    NoObjective(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("{0}")]
    Analysis(String),
    #[error("trace format: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failure of the inner subproblem solve.
#[derive(Debug, Error)]
pub enum SubproblemError<T: Real> {
    /// The inner budget ran out before the inexactness certificate held.
    #[error("inner budget of {iters} iterations exhausted: residual {hatr} above tolerance {tol}")]
    InnerBudgetExhausted { best: DVector<T>, hatr: T, tol: T, iters: usize },
    #[error(transparent)]
    Solver(#[from] Error),
}
