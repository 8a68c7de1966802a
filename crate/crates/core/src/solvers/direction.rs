use nalgebra::DVector;

use crate::config::SolverConfig;
use crate::error::SubproblemError;
use crate::operators::build_metric;
use crate::problem::ProblemInstance;
use crate::scalar::{all_finite, Real};
use crate::subproblem::solve_subproblem;

/// Candidate x̃_{t+1} with the diagnostics recorded in the trace.
#[derive(Clone, Debug)]
pub struct Proposal<T: Real> {
    pub x_tilde: DVector<T>,
    /// μ_t of the metric used, if any.
    pub mu: Option<T>,
    /// ĥr_t(x̃), if the provider certifies it.
    pub subres: Option<T>,
    /// Tolerance the certificate was checked against.
    pub tol: Option<T>,
    pub tol_floored: bool,
    pub inner_iters: usize,
    /// Exact ‖H_t‖, for the step–residual bound in audits.
    pub h_norm: Option<T>,
    pub metric_psd: bool,
}

impl<T: Real> Proposal<T> {
    /// A bare point without diagnostics.
    pub fn point(x_tilde: DVector<T>) -> Self {
        Self {
            x_tilde,
            mu: None,
            subres: None,
            tol: None,
            tol_floored: false,
            inner_iters: 0,
            h_norm: None,
            metric_psd: true,
        }
    }
}

/// Source of tentative iterates x̃_{t+1}.
///
/// The line searches of Algorithms 2 and 3 stay globally convergent for any
/// provider; fast local convergence needs x̃ close to the exact Newton point.
pub trait DirectionProvider<T: Real> {
    fn propose(
        &mut self,
        problem: &ProblemInstance<T>,
        x_t: &DVector<T>,
        r_t: T,
        config: &SolverConfig<T>,
    ) -> Result<Proposal<T>, SubproblemError<T>>;

    /// True only for [`SubproblemDirection`]; other providers are flagged in traces.
    fn is_default(&self) -> bool {
        false
    }
}

/// Default provider: build H_t and solve the subproblem inexactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct SubproblemDirection;

impl<T: Real> DirectionProvider<T> for SubproblemDirection {
    fn propose(
        &mut self,
        problem: &ProblemInstance<T>,
        x_t: &DVector<T>,
        r_t: T,
        config: &SolverConfig<T>,
    ) -> Result<Proposal<T>, SubproblemError<T>> {
        let h = build_metric(problem, x_t, r_t, config)?;
        let res = solve_subproblem(problem, x_t, r_t, &h, config)?;
        Ok(Proposal {
            x_tilde: res.x_tilde,
            mu: Some(h.mu),
            subres: Some(res.hatr),
            tol: Some(res.tol_used),
            tol_floored: res.tol_floored,
            inner_iters: res.inner_iters,
            h_norm: Some(h.operator_norm()),
            metric_psd: h.is_psd(),
        })
    }

    fn is_default(&self) -> bool {
        true
    }
}

pub(crate) fn check_proposal<T: Real>(p: &Proposal<T>, dim: usize) -> crate::Result<()> {
    if p.x_tilde.len() != dim {
        return Err(crate::Error::Dimension {
            expected: dim,
            found: p.x_tilde.len(),
        });
    }
    if !all_finite(&p.x_tilde) {
        return Err(crate::Error::NonFinite("direction provider"));
    }
    Ok(())
}
