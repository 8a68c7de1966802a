use serde::Serialize;

use crate::config::SolverConfig;
use crate::problem::ProblemInstance;
use crate::scalar::Real;
use crate::subproblem::certificate_tolerance;
use crate::trace::{Algorithm, InvariantFlags, IterateTrace};

/// Slack allowed in the step–residual bound.
pub const STEP_BOUND_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// subres ≤ mode-appropriate tolerance at r_t.
    Certificate,
    /// α = 1 or α ≥ βμ/(L + 2γ‖p̃‖^δ) (Algorithms 2 and 3).
    StepSizeFloor,
    /// F_{t+1} < F_t (Algorithms 2 and 3).
    StrictDecrease,
    /// η never increases (Algorithm 1).
    EtaMonotone,
    /// Hybrid steps satisfy r(x̃) ≤ ση and F(x̃) ≤ C̄ (Algorithm 1).
    HybridCap,
    /// The symmetric part of J_t was PSD.
    MetricPsd,
    /// (1 − ν)r_t ≤ (‖H_t‖ + 2)‖p̃_t‖ whenever ĥr_t ≤ ν r_t.
    StepResidualBound,
}

/// A failed check; `margin = rhs − lhs` is negative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    /// Row index in the trace.
    pub row: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

fn violation(rule: Rule, row: usize, lhs: f64, rhs: f64) -> Violation {
    Violation {
        rule,
        row,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// Re-verifies the solver invariants row by row.
///
/// Checks that need in-memory fields (‖H_t‖, PSD flags) are skipped for
/// traces read back from CSV, which do not carry them. Algorithm-specific
/// rules apply only when `trace.algorithm` is known.
pub fn audit_trace<T: Real>(trace: &IterateTrace<T>, problem: &ProblemInstance<T>, config: &SolverConfig<T>) -> Vec<Violation> {
    let rows = trace.rows();
    let mode = problem.mode();
    let f = |v: T| v.as_f64();
    let mut out = Vec::new();
    let line_search = matches!(trace.algorithm, Some(Algorithm::Alg2 | Algorithm::Alg3));

    for (i, row) in rows.iter().enumerate() {
        if let Some(subres) = row.subres {
            // external providers may report a residual; the tolerance is the library's
            if let Ok((tol, _)) = certificate_tolerance(mode, row.r, config) {
                if subres > tol {
                    out.push(violation(Rule::Certificate, i, f(subres), f(tol)));
                }
            }
            if let (Some(h), Some(pn)) = (row.h_norm, row.step_norm) {
                if subres <= config.nu * row.r {
                    let lhs = f((T::one() - config.nu) * row.r);
                    let rhs = f((h + T::lit(2.0)) * pn);
                    if lhs > rhs + STEP_BOUND_SLACK {
                        out.push(violation(Rule::StepResidualBound, i, lhs, rhs));
                    }
                }
            }
        }
        if row.flags.contains(InvariantFlags::METRIC_NOT_PSD) {
            out.push(violation(Rule::MetricPsd, i, 1.0, 0.0));
        }
        if line_search {
            if let (Some(alpha), Some(mu), Some(pn)) = (row.alpha, row.mu, row.step_norm) {
                if alpha != T::one() {
                    let floor = config.beta * mu / (problem.lipschitz() + T::lit(2.0) * config.gamma * pn.powf(config.delta));
                    if alpha < floor {
                        out.push(violation(Rule::StepSizeFloor, i, f(floor), f(alpha)));
                    }
                }
            }
            if let (Some(fa), Some(fb)) = (row.objective, rows.get(i + 1).and_then(|r| r.objective)) {
                if !(fb < fa) {
                    out.push(violation(Rule::StrictDecrease, i + 1, f(fb), f(fa)));
                }
            }
        }
    }

    if trace.algorithm == Some(Algorithm::Alg1) && !rows.is_empty() {
        let f0 = rows[0].objective;
        let c_bar = config.c_bar.or(f0.map(|v| v + T::one()));
        let mut eta = rows[0].r;
        for (i, row) in rows.iter().enumerate() {
            if row.unit_step != Some(true) {
                continue;
            }
            let Some(next) = rows.get(i + 1) else { continue };
            if next.r > config.sigma * eta {
                out.push(violation(Rule::HybridCap, i, f(next.r), f(config.sigma * eta)));
            }
            if let (Some(fx), Some(cb)) = (next.objective, c_bar) {
                if fx > cb {
                    out.push(violation(Rule::HybridCap, i, f(fx), f(cb)));
                }
            }
            if next.r > eta {
                out.push(violation(Rule::EtaMonotone, i, f(next.r), f(eta)));
            }
            eta = next.r;
        }
    }
    out
}
