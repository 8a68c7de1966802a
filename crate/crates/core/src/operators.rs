//! Residual maps and the variable metric H_t.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::problem::{RegularizedProblem, Splitting};
use crate::scalar::{all_finite, Real};

/// Relative slack on ‖H‖ so rounding in the SVD never yields an underestimate.
const NORM_MARGIN: f64 = 1e-10;
/// Tolerance of the PSD test on the symmetric part of J_t, relative to ‖v‖².
pub const PSD_TOLERANCE: f64 = 1e-10;

pub(crate) fn ensure_finite<T: Real>(v: &DVector<T>, what: &'static str) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Forward-backward residual R(x) = x − (Id + B)^{-1}(x − A(x)) and r = ‖R(x)‖.
pub fn residual_fb<T, S>(problem: &S, x: &DVector<T>) -> Result<(DVector<T>, T)>
where
    T: Real,
    S: Splitting<T> + ?Sized,
{
    let a = problem.forward(x);
    ensure_finite(&a, "forward map")?;
    let res = if problem.resolvent_is_identity() {
        a
    } else {
        x - problem.resolvent(T::one(), &(x - &a))
    };
    ensure_finite(&res, "forward-backward residual")?;
    let r = res.norm();
    Ok((res, r))
}

/// The metric H_t = μ_t·Id + J_t.
#[derive(Clone, Debug)]
pub struct Metric<T: Real> {
    pub mu: T,
    /// J_t; may be non-symmetric in equation mode.
    pub jacobian: DMatrix<T>,
    /// Upper bound on ‖H_t‖ used for inner step sizes.
    pub norm_bound: T,
}

impl<T: Real> Metric<T> {
    /// Assembles a metric with a guaranteed upper bound on ‖H‖.
    pub fn new(mu: T, jacobian: DMatrix<T>) -> Self {
        let mut m = Metric {
            mu,
            jacobian,
            norm_bound: T::one(),
        };
        m.norm_bound = (m.operator_norm() * T::lit(1.0 + NORM_MARGIN)).max(m.mu);
        m
    }

    pub fn dim(&self) -> usize {
        self.jacobian.nrows()
    }

    /// (μ·Id + J)v.
    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        let mut out = &self.jacobian * v;
        out.axpy(self.mu, v, T::one());
        out
    }

    pub fn apply_transpose(&self, v: &DVector<T>) -> DVector<T> {
        let mut out = self.jacobian.tr_mul(v);
        out.axpy(self.mu, v, T::one());
        out
    }

    pub fn matrix(&self) -> DMatrix<T> {
        let mut h = self.jacobian.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += self.mu;
        }
        h
    }

    /// Exact spectral norm ‖H‖ via singular values.
    pub fn operator_norm(&self) -> T {
        self.matrix().singular_values().iter().fold(T::zero(), |m, &s| m.max(s))
    }

    /// Smallest eigenvalue of the symmetric part of J.
    pub fn min_symmetric_eigenvalue(&self) -> T {
        let sym = (&self.jacobian + self.jacobian.transpose()) * T::lit(0.5);
        sym.symmetric_eigenvalues().iter().fold(T::infinity(), |m, &e| m.min(e))
    }

    /// ⟨v, J v⟩ ≥ −1e-10·‖v‖² for all v.
    pub fn is_psd(&self) -> bool {
        self.min_symmetric_eigenvalue() >= -T::lit(PSD_TOLERANCE)
    }
}

/// Fixed symmetric PSD direction with unit spectral norm, used by the
/// perturbation hook.
fn perturbation_direction<T: Real>(n: usize) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let p = &g * g.transpose();
    let norm = p.symmetric_eigenvalues().max();
    (p / norm).map(T::lit)
}

/// Builds H_t at x_t.
///
/// J_t is the Jacobian (symmetrized Hessian in optimization mode) at x_t, plus
/// η·r_t^θ·P when a perturbation is configured.
pub fn build_metric<T, S>(problem: &S, x_t: &DVector<T>, r_t: T, config: &SolverConfig<T>) -> Result<Metric<T>>
where
    T: Real,
    S: Splitting<T> + ?Sized,
{
    if !(r_t > T::zero()) {
        return Err(Error::Config(format!("metric requires r_t > 0, got {r_t}")));
    }
    let mu = config.damping(r_t)?;
    let mut jac = problem
        .jacobian(x_t)
        .ok_or_else(|| Error::MissingJacobian("metric construction".into()))?;
    if jac.nrows() != x_t.len() || jac.ncols() != x_t.len() {
        return Err(Error::Dimension {
            expected: x_t.len(),
            found: jac.nrows(),
        });
    }
    if !jac.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("jacobian"));
    }
    if let Some(eta) = config.jacobian_perturbation {
        if eta > T::zero() {
            let scale = eta * r_t.powf(config.theta);
            jac += perturbation_direction::<T>(x_t.len()) * scale;
        }
    }
    Ok(Metric::new(mu, jac))
}

/// Subproblem residual
/// R̂_t(x) = x − (Id + B)^{-1}((Id − H)(x) + (H − A)(x_t)) and its norm.
pub fn subproblem_residual<T, S>(problem: &S, x_t: &DVector<T>, metric: &Metric<T>, x: &DVector<T>) -> Result<(DVector<T>, T)>
where
    T: Real,
    S: Splitting<T> + ?Sized,
{
    let a_t = problem.forward(x_t);
    ensure_finite(&a_t, "forward map")?;
    let hd = metric.apply(&(x - x_t));
    subproblem_residual_with(problem, &a_t, &hd, x)
}

/// [`subproblem_residual`] with A(x_t) and H(x − x_t) precomputed.
pub(crate) fn subproblem_residual_with<T, S>(problem: &S, a_t: &DVector<T>, hd: &DVector<T>, x: &DVector<T>) -> Result<(DVector<T>, T)>
where
    T: Real,
    S: Splitting<T> + ?Sized,
{
    let grad = a_t + hd;
    let res = if problem.resolvent_is_identity() {
        grad
    } else {
        x - problem.resolvent(T::one(), &(x - &grad))
    };
    ensure_finite(&res, "subproblem residual")?;
    let r = res.norm();
    Ok((res, r))
}

/// Proximal gradient G_L(x) = L·(x − prox_{Ψ/L}(x − ∇f(x)/L)) and the step
/// x̄ = x − G_L(x)/L.
pub fn prox_gradient<T: Real>(problem: &RegularizedProblem<T>, x: &DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
    let l = problem.lipschitz;
    if !(l > T::zero()) {
        return Err(Error::Problem(format!("Lipschitz constant must be positive, got {l}")));
    }
    let g = problem.objective.gradient(x);
    ensure_finite(&g, "gradient")?;
    if problem.regularizer.is_zero() {
        let xbar = x - &g / l;
        return Ok((g, xbar));
    }
    let step = T::one() / l;
    let xbar = problem.regularizer.prox(step, &(x - &g * step));
    ensure_finite(&xbar, "prox")?;
    let gl = (x - &xbar) * l;
    Ok((gl, xbar))
}
