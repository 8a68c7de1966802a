//! Outer iterations: the local scheme, the hybrid method (Algorithm 1), the
//! strict-decrease line search with a prox-gradient correction (Algorithm 2)
//! and its smooth simplification (Algorithm 3).

mod direction;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result, SubproblemError};
use crate::operators::{prox_gradient, residual_fb};
use crate::problem::{ProblemInstance, RegularizedProblem};
use crate::scalar::{all_finite, Real};
use crate::trace::{Algorithm, InvariantFlags, IterateTrace, TraceRow};

pub use direction::{DirectionProvider, Proposal, SubproblemDirection};

/// Maximum number of step-size reductions in any line search.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// r_t ≤ r_tol.
    ResidualTol,
    /// p̃_t = 0, or the line search exhausted its reductions.
    StepZero,
    OuterBudget,
    InnerBudgetExhausted,
    /// No trial point could decrease F in floating point: the required
    /// decrease is below the resolution of F_t.
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct RunResult<T: Real> {
    pub final_x: DVector<T>,
    pub trace: IterateTrace<T>,
    pub termination: Termination,
    /// Human-readable detail for abnormal terminations.
    pub message: Option<String>,
}

impl<T: Real> RunResult<T> {
    /// Number of outer steps taken.
    pub fn iterations(&self) -> usize {
        self.trace.steps().count()
    }

    pub fn final_residual(&self) -> T {
        self.trace.rows().last().map_or(T::infinity(), |r| r.r)
    }
}

/// Runs `algorithm` from x0 with the default subproblem direction.
pub fn run<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, config: &SolverConfig<T>, algorithm: Algorithm) -> Result<RunResult<T>> {
    run_with(problem, x0, config, algorithm, &mut SubproblemDirection)
}

/// Local scheme x_{t+1} = x̃_{t+1}; the only option for generalized equations.
pub fn run_local<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    run(problem, x0, config, Algorithm::Local)
}

/// Hybrid unit-step/Armijo method (Algorithm 1).
pub fn run_alg1<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    run(problem, x0, config, Algorithm::Alg1)
}

/// Strict-decrease line search with a prox-gradient correction (Algorithm 2).
pub fn run_alg2<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    run(problem, x0, config, Algorithm::Alg2)
}

/// Algorithm 2 with a caller-supplied direction provider.
pub fn run_alg2_with<T: Real>(
    problem: &ProblemInstance<T>,
    x0: &DVector<T>,
    config: &SolverConfig<T>,
    provider: &mut dyn DirectionProvider<T>,
) -> Result<RunResult<T>> {
    run_with(problem, x0, config, Algorithm::Alg2, provider)
}

/// Line search directly on x_t + αp̃ (Algorithm 3); requires Ψ ≡ 0.
pub fn run_alg3<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    run(problem, x0, config, Algorithm::Alg3)
}

enum Step<T: Real> {
    Accept { x: DVector<T>, alpha: T, unit: bool },
    Stop(Termination, String),
}

struct Hybrid<T: Real> {
    eta: T,
    c_bar: T,
}

/// Shared outer loop for every algorithm and provider.
pub fn run_with<T: Real>(
    problem: &ProblemInstance<T>,
    x0: &DVector<T>,
    config: &SolverConfig<T>,
    algorithm: Algorithm,
    provider: &mut dyn DirectionProvider<T>,
) -> Result<RunResult<T>> {
    config.validate()?;
    problem.check_dimension(x0)?;
    if !all_finite(x0) {
        return Err(Error::NonFinite("starting point"));
    }
    let reg: Option<&RegularizedProblem<T>> = if algorithm.needs_objective() {
        Some(problem.require_regularized(algorithm.name())?)
    } else {
        problem.as_regularized()
    };
    if algorithm == Algorithm::Alg3 && !reg.is_some_and(|p| p.regularizer.is_zero()) {
        return Err(Error::Config(format!(
            "alg3 requires a zero regularizer; `{}` has one",
            problem.name
        )));
    }
    if algorithm == Algorithm::Alg2 && !(problem.lipschitz() > T::zero()) {
        return Err(Error::Problem(format!(
            "alg2 needs a positive Lipschitz constant, got {}",
            problem.lipschitz()
        )));
    }

    let f_value = |x: &DVector<T>| -> Result<Option<T>> {
        match reg {
            Some(p) => {
                let v = p.value(x);
                if !v.is_finite() {
                    Err(Error::NonFinite("objective"))
                } else {
                    Ok(Some(v))
                }
            }
            None => Ok(None),
        }
    };

    let mut hybrid = None;
    if algorithm == Algorithm::Alg1 {
        let f0 = f_value(x0)?.expect("alg1 has an objective");
        let c_bar = config.c_bar.unwrap_or(f0 + T::one());
        if !(c_bar > f0) {
            return Err(Error::Parameter {
                name: "c_bar",
                value: c_bar.as_f64(),
                range: "(F(x0), inf)",
            });
        }
        let (_, r0) = residual_fb(problem, x0)?;
        hybrid = Some(Hybrid { eta: r0, c_bar });
    }

    let mut trace = IterateTrace::new(Some(algorithm));
    let mut x = x0.clone();
    let mut message = None;
    let mut t = 0;
    let termination = loop {
        let (_, r) = residual_fb(problem, &x)?;
        let f = f_value(&x)?;
        let dist = problem.distance(&x);
        let state = TraceRow::state(t, r, f, dist);
        if r <= config.r_tol {
            trace.push(state)?;
            break Termination::ResidualTol;
        }
        if t >= config.max_outer {
            trace.push(state)?;
            break Termination::OuterBudget;
        }
        let proposal = match provider.propose(problem, &x, r, config) {
            Ok(p) => p,
            Err(SubproblemError::InnerBudgetExhausted { hatr, tol, iters, .. }) => {
                trace.push(state)?;
                message = Some(format!(
                    "inner budget of {iters} iterations exhausted at t = {t}: residual {hatr:e} above tolerance {tol:e}"
                ));
                break Termination::InnerBudgetExhausted;
            }
            Err(SubproblemError::Solver(e)) => return Err(e),
        };
        direction::check_proposal(&proposal, problem.dim)?;
        let p = &proposal.x_tilde - &x;
        let pn = p.norm();
        if pn == T::zero() {
            trace.push(state)?;
            message = Some(format!("zero step at t = {t}"));
            break Termination::StepZero;
        }

        let mut row = state;
        row.mu = proposal.mu;
        row.step_norm = Some(pn);
        row.inner_iters = Some(proposal.inner_iters);
        row.subres = proposal.subres;
        row.h_norm = proposal.h_norm;
        row.tol = proposal.tol;
        if !proposal.metric_psd {
            row.flags |= InvariantFlags::METRIC_NOT_PSD;
        }
        if proposal.tol_floored {
            row.flags |= InvariantFlags::TOL_FLOORED;
        }
        if !provider.is_default() {
            row.flags |= InvariantFlags::EXTERNAL_DIRECTION;
        }

        let step = match algorithm {
            Algorithm::Local => Step::Accept {
                x: proposal.x_tilde,
                alpha: T::one(),
                unit: true,
            },
            Algorithm::Alg1 => {
                let reg = reg.expect("checked above");
                let state = hybrid.as_mut().expect("initialized for alg1");
                alg1_step(
                    problem,
                    reg,
                    &x,
                    &proposal,
                    pn,
                    f.expect("objective"),
                    proposal.mu,
                    t,
                    state,
                    config,
                )?
            }
            Algorithm::Alg2 | Algorithm::Alg3 => {
                let reg = reg.expect("checked above");
                decrease_step(reg, &x, &p, pn, f.expect("objective"), algorithm == Algorithm::Alg2, config)?
            }
        };
        match step {
            Step::Accept { x: next, alpha, unit } => {
                if !all_finite(&next) {
                    return Err(Error::NonFinite("outer iterate"));
                }
                row.alpha = Some(alpha);
                row.unit_step = Some(unit);
                trace.push(row)?;
                x = next;
            }
            Step::Stop(term, msg) => {
                trace.push(TraceRow::state(t, r, f, dist))?;
                message = Some(msg);
                break term;
            }
        }
        t += 1;
    };

    Ok(RunResult {
        final_x: x,
        trace,
        termination,
        message,
    })
}

#[allow(clippy::too_many_arguments)]
fn alg1_step<T: Real>(
    problem: &ProblemInstance<T>,
    reg: &RegularizedProblem<T>,
    x: &DVector<T>,
    proposal: &Proposal<T>,
    pn: T,
    f: T,
    mu: Option<T>,
    t: usize,
    state: &mut Hybrid<T>,
    config: &SolverConfig<T>,
) -> Result<Step<T>> {
    if t > 0 {
        let (_, r_tilde) = residual_fb(problem, &proposal.x_tilde)?;
        if r_tilde <= config.sigma * state.eta && reg.value(&proposal.x_tilde) <= state.c_bar {
            state.eta = r_tilde;
            return Ok(Step::Accept {
                x: proposal.x_tilde.clone(),
                alpha: T::one(),
                unit: true,
            });
        }
    }
    // Armijo on F(x + β^m p̃) ≤ F(x) − γ·μ·β^m·‖p̃‖²; providers without a
    // metric fall back to the current damping rule.
    let mu = match mu {
        Some(mu) => mu,
        None => config.damping(residual_fb(problem, x)?.1)?,
    };
    let p = &proposal.x_tilde - x;
    let mut alpha = T::one();
    for _ in 0..=MAX_BACKTRACKS {
        let trial = x + &p * alpha;
        if reg.value(&trial) <= f - config.gamma * mu * alpha * pn * pn {
            return Ok(Step::Accept {
                x: trial,
                alpha,
                unit: false,
            });
        }
        alpha *= config.beta;
    }
    Ok(Step::Stop(
        Termination::StepZero,
        format!("Armijo backtracking failed after {MAX_BACKTRACKS} reductions at t = {t}"),
    ))
}

/// Strict-decrease backtracking shared by Algorithms 2 and 3.
fn decrease_step<T: Real>(
    reg: &RegularizedProblem<T>,
    x: &DVector<T>,
    p: &DVector<T>,
    pn: T,
    f: T,
    compose_prox: bool,
    config: &SolverConfig<T>,
) -> Result<Step<T>> {
    let full = pn.powf(T::lit(2.0) + config.delta);
    let weight = if config.relaxed_acceptance { full.min(pn * pn) } else { full };
    let mut alpha = T::one();
    for _ in 0..=MAX_BACKTRACKS {
        let y = x + p * alpha;
        let trial = if compose_prox { prox_gradient(reg, &y)?.1 } else { y };
        let ft = reg.value(&trial);
        let bound = f - config.gamma * alpha * alpha * weight;
        // the strict comparison guards against decrements below the resolution of F
        if ft <= bound && ft < f {
            return Ok(Step::Accept {
                x: trial,
                alpha,
                unit: alpha == T::one(),
            });
        }
        alpha *= config.beta;
    }
    if f - config.gamma * weight == f {
        Ok(Step::Stop(
            Termination::Stagnated,
            format!("required decrease {:e} is below the resolution of F = {f:e}", config.gamma * weight),
        ))
    } else {
        Ok(Step::Stop(
            Termination::StepZero,
            format!("no acceptable step after {MAX_BACKTRACKS} reductions; check the Lipschitz constant"),
        ))
    }
}
