//! Inexact solution of the per-iteration Newton subproblem.
//!
//! In optimization mode the subproblem is
//! `min q_t(x) = ⟨∇f(x_t), x − x_t⟩ + ½⟨H_t(x − x_t), x − x_t⟩ + Ψ(x)`;
//! for generalized equations it is `0 ∈ A(x_t) + H_t(x − x_t) + B(x)`.
//! Both are solved until the residual certificate ĥr_t(x̃) ≤ tol holds.

use nalgebra::DVector;

use crate::config::{DampingMode, InnerMethod, SolverConfig};
use crate::error::{Error, SubproblemError};
use crate::operators::{ensure_finite, subproblem_residual_with, Metric};
use crate::problem::{ProblemInstance, ProblemMode, RegularizedProblem, Regularizer, Splitting};
use crate::scalar::Real;

/// Inner residual checkpoints are recorded every this many iterations.
pub const CHECKPOINT_EVERY: usize = 5;
/// FBF step as a fraction of 1/‖H‖; Tseng's method makes no progress at exactly 1/L.
const FBF_STEP_FRACTION: f64 = 0.9;

/// Outcome of a successful subproblem solve.
#[derive(Clone, Debug)]
pub struct SubproblemResult<T: Real> {
    pub x_tilde: DVector<T>,
    /// ĥr_t(x̃).
    pub hatr: T,
    /// q_t(x̃) ≤ q_t(x_t); always true in equation mode.
    pub model_decrease_ok: bool,
    pub inner_iters: usize,
    pub tol_used: T,
    /// The tolerance formula fell below the precision floor.
    pub tol_floored: bool,
    /// (iteration, ĥr_t) every [`CHECKPOINT_EVERY`] iterations.
    pub checkpoints: Vec<(usize, T)>,
}

/// q_t(x) = ⟨g_t, x − x_t⟩ + ½⟨H(x − x_t), x − x_t⟩ + Ψ(x).
pub fn model_value<T: Real>(problem: &RegularizedProblem<T>, x_t: &DVector<T>, g_t: &DVector<T>, h: &Metric<T>, x: &DVector<T>) -> T {
    let d = x - x_t;
    g_t.dot(&d) + T::lit(0.5) * h.apply(&d).dot(&d) + problem.regularizer.value(x)
}

/// q_t(x) − q_t(x_t), evaluated without forming Ψ(x) and Ψ(x_t) separately.
fn model_delta<T: Real>(
    reg: &dyn Regularizer<T>,
    x_t: &DVector<T>,
    g_t: &DVector<T>,
    d: &DVector<T>,
    hd: &DVector<T>,
    x: &DVector<T>,
) -> T {
    g_t.dot(d) + T::lit(0.5) * hd.dot(d) + reg.value_difference(x, x_t)
}

/// Inexactness tolerance for residual r_t, and whether the floor was applied.
///
/// Power damping: ν·min{r^{1+ρ}, r} (optimization) or ν·r^{1+ρ} (equations).
/// Modulus damping: ν·ω(r)·r. The result never drops below
/// `tol_floor·max(1, r)`, which doubles as the surrogate for ν = 0.
pub fn certificate_tolerance<T: Real>(mode: ProblemMode, r: T, config: &SolverConfig<T>) -> crate::Result<(T, bool)> {
    let formula = match config.damping_mode {
        DampingMode::Power => {
            let pow = r.powf(T::one() + config.rho);
            match mode {
                ProblemMode::Optimization => config.nu * pow.min(r),
                ProblemMode::Equation => config.nu * pow,
            }
        }
        DampingMode::Modulus => {
            let w = config
                .modulus
                .as_ref()
                .ok_or_else(|| Error::Config("modulus damping selected but no modulus configured".into()))?;
            config.nu * w.eval(r) * r
        }
    };
    let floor = config.tol_floor * r.max(T::one());
    if floor > formula {
        Ok((floor, true))
    } else {
        Ok((formula, false))
    }
}

/// Inner method actually used for a problem under a configuration.
pub fn inner_method<T: Real>(problem: &ProblemInstance<T>, config: &SolverConfig<T>) -> crate::Result<InnerMethod> {
    match (config.inner, problem.mode()) {
        (Some(InnerMethod::Accelerated), ProblemMode::Equation) => Err(Error::Config(
            "accelerated inner method needs an objective; use forward_backward_forward".into(),
        )),
        (Some(m), _) => Ok(m),
        (None, ProblemMode::Optimization) => Ok(InnerMethod::Accelerated),
        (None, ProblemMode::Equation) => Ok(InnerMethod::ForwardBackwardForward),
    }
}

struct Tracker<T: Real> {
    best: Option<(T, DVector<T>)>,
    checkpoints: Vec<(usize, T)>,
}

impl<T: Real> Tracker<T> {
    fn observe(&mut self, k: usize, hatr: T, z: &DVector<T>) {
        if k.is_multiple_of(CHECKPOINT_EVERY) {
            self.checkpoints.push((k, hatr));
        }
        if self.best.as_ref().is_none_or(|(b, _)| hatr < *b) {
            self.best = Some((hatr, z.clone()));
        }
    }
}

/// Solves the subproblem at x_t until ĥr_t(x̃) ≤ tol and, in optimization
/// mode, q_t(x̃) ≤ q_t(x_t).
///
/// The inner iteration starts at x_t. Its step is 1/‖H_t‖ (the metric's norm
/// bound). The certificate is tested after every inner step.
pub fn solve_subproblem<T: Real>(
    problem: &ProblemInstance<T>,
    x_t: &DVector<T>,
    r_t: T,
    h: &Metric<T>,
    config: &SolverConfig<T>,
) -> Result<SubproblemResult<T>, SubproblemError<T>> {
    problem.check_dimension(x_t)?;
    if !(r_t > T::zero()) {
        return Err(Error::Config(format!("subproblem requires r_t > 0, got {r_t}")).into());
    }
    let (tol, tol_floored) = certificate_tolerance(problem.mode(), r_t, config)?;
    let method = inner_method(problem, config)?;
    let a_t = problem.forward(x_t);
    ensure_finite(&a_t, "forward map")?;
    let reg = problem.as_regularized().map(|p| p.regularizer.as_ref());
    let tau = T::one() / h.norm_bound;

    let mut tracker = Tracker {
        best: None,
        checkpoints: Vec::new(),
    };

    // Certificate and model-decrease test at z; H(z − x_t) is formed exactly as
    // in `subproblem_residual`, so the reported ĥr reproduces bit for bit.
    let check = |z: &DVector<T>, k: usize, tracker: &mut Tracker<T>| -> Result<Option<SubproblemResult<T>>, SubproblemError<T>> {
        let d = z - x_t;
        let hd = h.apply(&d);
        let (_, hatr) = subproblem_residual_with(problem, &a_t, &hd, z)?;
        tracker.observe(k, hatr, z);
        if hatr > tol {
            return Ok(None);
        }
        let model_ok = match reg {
            Some(reg) => model_delta(reg, x_t, &a_t, &d, &hd, z) <= T::zero(),
            None => true,
        };
        if !model_ok {
            return Ok(None);
        }
        Ok(Some(SubproblemResult {
            x_tilde: z.clone(),
            hatr,
            model_decrease_ok: true,
            inner_iters: k,
            tol_used: tol,
            tol_floored,
            checkpoints: std::mem::take(&mut tracker.checkpoints),
        }))
    };

    let forward = |z: &DVector<T>| -> DVector<T> { &a_t + h.apply(&(z - x_t)) };

    let mut z = x_t.clone();
    if let Some(done) = check(&z, 0, &mut tracker)? {
        return Ok(done);
    }

    match method {
        InnerMethod::ForwardBackward => {
            for k in 1..=config.max_inner {
                let g = forward(&z);
                z = problem.resolvent(tau, &(&z - &g * tau));
                ensure_finite(&z, "inner iterate")?;
                if let Some(done) = check(&z, k, &mut tracker)? {
                    return Ok(done);
                }
            }
        }
        InnerMethod::Accelerated => {
            let reg = reg.expect("accelerated method is only selected in optimization mode");
            // model value relative to q_t(x_t), for the restart test
            let delta = |z: &DVector<T>| -> T {
                let d = z - x_t;
                let hd = h.apply(&d);
                model_delta(reg, x_t, &a_t, &d, &hd, z)
            };
            let mut y = z.clone();
            let mut s = T::one();
            let mut q_prev = T::zero();
            for k in 1..=config.max_inner {
                let g = forward(&y);
                let z_next = problem.resolvent(tau, &(&y - &g * tau));
                ensure_finite(&z_next, "inner iterate")?;
                let q_next = delta(&z_next);
                if let Some(done) = check(&z_next, k, &mut tracker)? {
                    return Ok(done);
                }
                if q_next > q_prev {
                    // function-value restart: drop momentum
                    s = T::one();
                    y = z_next.clone();
                } else {
                    let s_next = (T::one() + (T::one() + T::lit(4.0) * s * s).sqrt()) * T::lit(0.5);
                    y = &z_next + (&z_next - &z) * ((s - T::one()) / s_next);
                    s = s_next;
                }
                q_prev = q_next;
                z = z_next;
            }
        }
        InnerMethod::ForwardBackwardForward => {
            let tau = tau * T::lit(FBF_STEP_FRACTION);
            let mut gz = forward(&z);
            for k in 1..=config.max_inner {
                let y = problem.resolvent(tau, &(&z - &gz * tau));
                let gy = forward(&y);
                z = &y - (&gy - &gz) * tau;
                ensure_finite(&z, "inner iterate")?;
                if let Some(done) = check(&z, k, &mut tracker)? {
                    return Ok(done);
                }
                gz = forward(&z);
            }
        }
    }

    let (hatr, best) = tracker.best.expect("at least one iterate was checked");
    Err(SubproblemError::InnerBudgetExhausted {
        best,
        hatr,
        tol,
        iters: config.max_inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Modulus, SolverParams};
    use crate::operators::{build_metric, residual_fb, subproblem_residual};
    use crate::problem::{BoxNormalCone, FnMap, FnObjective, GeneralizedEquation, L1Norm, ZeroRegularizer};
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn quadratic(m: DMatrix<f64>, b: DVector<f64>) -> ProblemInstance<f64> {
        let (m1, m2, m3) = (m.clone(), m.clone(), m.clone());
        let (b1, b2) = (b.clone(), b.clone());
        let l = m.symmetric_eigenvalues().max();
        let obj = FnObjective::new(
            move |x: &DVector<f64>| 0.5 * x.dot(&(&m1 * x)) - b1.dot(x),
            move |x: &DVector<f64>| &m2 * x - &b2,
        )
        .with_hessian(move |_| m3.clone());
        ProblemInstance::regularized("quad", RegularizedProblem::new(obj, ZeroRegularizer, l), DVector::zeros(b.len()))
    }

    fn lasso2() -> ProblemInstance<f64> {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.0, 1.0, 1.0, 1.0]);
        let b = v(&[1.0, -2.0, 0.5]);
        let g = d.transpose() * &d;
        let (d1, b1, d2, b2) = (d.clone(), b.clone(), d.clone(), b.clone());
        let obj = FnObjective::new(
            move |x: &DVector<f64>| 0.5 * (&d1 * x - &b1).norm_squared(),
            move |x: &DVector<f64>| d2.transpose() * (&d2 * x - &b2),
        )
        .with_hessian(move |_| g.clone());
        let l = (d.transpose() * &d).symmetric_eigenvalues().max();
        ProblemInstance::regularized("lasso2", RegularizedProblem::new(obj, L1Norm::new(0.3), l), DVector::zeros(2))
    }

    #[test]
    fn model_value_examples() {
        let p = quadratic(DMatrix::identity(2, 2), v(&[0.0, 0.0]));
        let reg = p.as_regularized().unwrap();
        let h = Metric::new(1.0, DMatrix::zeros(2, 2));
        let xt = v(&[0.5, 0.5]);
        assert_eq!(model_value(reg, &xt, &v(&[1.0, 0.0]), &h, &v(&[-0.5, 0.5])), -0.5);
        assert_eq!(model_value(reg, &xt, &v(&[1.0, 0.0]), &h, &xt), 0.0);

        let lasso = lasso2();
        let reg = lasso.as_regularized().unwrap();
        let xt = v(&[0.2, -0.4]);
        let x = v(&[-0.1, 0.7]);
        let g = reg.objective.gradient(&xt);
        let h = Metric::new(0.25, DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        assert_eq!(model_value(reg, &xt, &g, &h, &xt), reg.regularizer.value(&xt));
        // naive re-derivation
        let d = [x[0] - xt[0], x[1] - xt[1]];
        let hd = [2.25 * d[0] + 0.5 * d[1], 0.5 * d[0] + 1.25 * d[1]];
        let naive = g[0] * d[0] + g[1] * d[1] + 0.5 * (hd[0] * d[0] + hd[1] * d[1]) + 0.3 * (0.1 + 0.7);
        assert!((model_value(reg, &xt, &g, &h, &x) - naive).abs() < 1e-14);
    }

    #[test]
    fn tolerance_formulas() {
        let cfg = SolverConfig::<f64>::default();
        let (tol, floored) = certificate_tolerance(ProblemMode::Optimization, 1e-2, &cfg).unwrap();
        assert!((tol - 1e-4).abs() < 1e-18);
        assert!(!floored);
        // r > 1: min picks r in optimization mode
        let (tol, _) = certificate_tolerance(ProblemMode::Optimization, 4.0, &cfg).unwrap();
        assert!((tol - 0.4).abs() < 1e-15);
        let (tol, _) = certificate_tolerance(ProblemMode::Equation, 4.0, &cfg).unwrap();
        assert!((tol - 0.8).abs() < 1e-15);
        let (tol, floored) = certificate_tolerance(ProblemMode::Optimization, 1e-10, &cfg).unwrap();
        assert_eq!(tol, 1e-14);
        assert!(floored);
        let exact = SolverConfig::<f64>::new(&SolverParams {
            nu: Some(0.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(certificate_tolerance(ProblemMode::Equation, 0.5, &exact).unwrap().0, 1e-14);
        assert_eq!(certificate_tolerance(ProblemMode::Equation, 3.0, &exact).unwrap().0, 3e-14);
        let modulus = cfg.clone().with_modulus(Modulus::Logarithmic).unwrap();
        let (tol, _) = certificate_tolerance(ProblemMode::Optimization, 1e-4, &modulus).unwrap();
        assert!((tol - 0.1 * Modulus::Logarithmic.eval(1e-4) * 1e-4).abs() < 1e-20);
    }

    #[test]
    fn quadratic_matches_dense_solve() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let p = quadratic(m.clone(), v(&[1.0, 2.0, -1.0]));
        let cfg = SolverConfig::<f64>::default();
        for inner in [InnerMethod::Accelerated, InnerMethod::ForwardBackward] {
            let cfg = SolverConfig {
                inner: Some(inner),
                ..cfg.clone()
            };
            let xt = v(&[0.3, -0.2, 0.9]);
            let (_, r) = residual_fb(&p, &xt).unwrap();
            let h = build_metric(&p, &xt, r, &cfg).unwrap();
            let res = solve_subproblem(&p, &xt, r, &h, &cfg).unwrap();
            let exact = &xt - h.matrix().lu().solve(&p.forward(&xt)).unwrap();
            let gap = (&res.x_tilde - &exact).norm();
            // ‖x − x̂‖ ≤ ĥr / μ_min(H) with λ_min(H) ≥ μ
            assert!(gap <= res.tol_used / h.mu, "{inner:?}: {gap}");
            assert!(res.hatr <= res.tol_used);
            assert!(res.model_decrease_ok);
            let (_, again) = subproblem_residual(&p, &xt, &h, &res.x_tilde).unwrap();
            assert_eq!(again.to_bits(), res.hatr.to_bits());
        }
    }

    #[test]
    fn lasso_certificate_and_model_decrease() {
        let p = lasso2();
        let reg = p.as_regularized().unwrap();
        let cfg = SolverConfig::<f64>::default();
        let xt = v(&[1.0, -1.0]);
        let (_, r) = residual_fb(&p, &xt).unwrap();
        let h = build_metric(&p, &xt, r, &cfg).unwrap();
        let res = solve_subproblem(&p, &xt, r, &h, &cfg).unwrap();
        let g = reg.objective.gradient(&xt);
        assert!(model_value(reg, &xt, &g, &h, &res.x_tilde) <= model_value(reg, &xt, &g, &h, &xt));
        let (_, again) = subproblem_residual(&p, &xt, &h, &res.x_tilde).unwrap();
        assert_eq!(again, res.hatr);
    }

    #[test]
    fn forward_backward_checkpoints_are_monotone() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 0.2]);
        let p = quadratic(m, v(&[1.0, 2.0, -1.0]));
        let cfg = SolverConfig {
            inner: Some(InnerMethod::ForwardBackward),
            ..SolverConfig::<f64>::new(&SolverParams {
                nu: Some(0.0),
                ..Default::default()
            })
            .unwrap()
        };
        let xt = v(&[5.0, -3.0, 2.0]);
        let (_, r) = residual_fb(&p, &xt).unwrap();
        let h = build_metric(&p, &xt, r, &cfg).unwrap();
        let res = solve_subproblem(&p, &xt, r, &h, &cfg).unwrap();
        assert!(res.checkpoints.len() > 3);
        for w in res.checkpoints[1..].windows(2) {
            assert!(w[1].1 <= w[0].1, "{:?}", res.checkpoints);
        }
    }

    fn skew_box() -> ProblemInstance<f64> {
        // strongly skew, weakly monotone affine map on the box
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 5.0, -5.0, 0.1]);
        let c = v(&[0.3, -0.2]);
        let (m1, m2) = (m.clone(), m.clone());
        let ge = GeneralizedEquation::new(
            FnMap::new(move |x: &DVector<f64>| &m1 * x + &c, move |_| m2.clone()),
            BoxNormalCone { lower: -1.0, upper: 1.0 },
            m.norm(),
        );
        ProblemInstance::equation("skew", ge, DVector::zeros(2))
    }

    #[test]
    fn equation_mode_uses_fbf_and_certifies() {
        let p = skew_box();
        let cfg = SolverConfig::<f64>::default();
        assert_eq!(inner_method(&p, &cfg).unwrap(), InnerMethod::ForwardBackwardForward);
        let xt = v(&[0.9, -0.4]);
        let (_, r) = residual_fb(&p, &xt).unwrap();
        let h = build_metric(&p, &xt, r, &cfg).unwrap();
        let res = solve_subproblem(&p, &xt, r, &h, &cfg).unwrap();
        assert!(res.hatr <= res.tol_used);
        let accel = SolverConfig {
            inner: Some(InnerMethod::Accelerated),
            ..cfg
        };
        assert!(solve_subproblem(&p, &xt, r, &h, &accel).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_best_iterate() {
        let p = skew_box();
        let cfg = SolverConfig::<f64>::new(&SolverParams {
            max_inner: Some(2),
            nu: Some(0.0),
            ..Default::default()
        })
        .unwrap();
        let xt = v(&[0.9, -0.4]);
        let (_, r) = residual_fb(&p, &xt).unwrap();
        let h = build_metric(&p, &xt, r, &cfg).unwrap();
        match solve_subproblem(&p, &xt, r, &h, &cfg) {
            Err(SubproblemError::InnerBudgetExhausted { best, hatr, tol, iters }) => {
                assert_eq!(iters, 2);
                assert!(hatr > tol);
                let (_, again) = subproblem_residual(&p, &xt, &h, &best).unwrap();
                assert_eq!(again, hatr);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
