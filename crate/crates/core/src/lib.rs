//! Inexact damped proximal-Newton solvers for degenerate problems.
//!
//! Everything is generic over the scalar type (`f32` or `f64`, see [`Real`]);
//! the aliases below fix it to `f64`, which is what the fixtures and the
//! acceptance tolerances are calibrated for.
//!
//! ```
//! use proxnewton::{problems::make_holder, solvers::run_alg3, Config};
//!
//! let problem = make_holder::<f64>(10, 1.5, 0, None).unwrap();
//! let config = Config::default();
//! let result = run_alg3(&problem, &problem.start, &config).unwrap();
//! assert!(result.final_residual() <= config.r_tol);
//! ```

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod operators;
pub mod problem;
pub mod problems;
pub mod scalar;
pub mod solvers;
pub mod subproblem;
pub mod trace;

pub use error::{Error, Result, SubproblemError};
pub use scalar::Real;
pub use solvers::{run, DirectionProvider, Proposal, Termination};
pub use trace::{Algorithm, TraceRow};

pub type Point = nalgebra::DVector<f64>;
pub type LinearMap = nalgebra::DMatrix<f64>;
pub type Problem = problem::ProblemInstance<f64>;
pub type Config = config::SolverConfig<f64>;
pub type Trace = trace::IterateTrace<f64>;
pub type Run = solvers::RunResult<f64>;
