//! Sampled sanity checks for problem instances: finite-difference derivatives,
//! firm nonexpansiveness of resolvents, the prox-gradient sandwich, empirical
//! error-bound constants and the subgradient bound on r.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{prox_gradient, residual_fb};
use crate::problem::{ProblemInstance, Splitting};
use crate::scalar::Real;

/// Relative tolerance of the finite-difference checks.
pub const FD_TOLERANCE: f64 = 1e-5;
/// Absolute slack for inequalities that hold exactly in exact arithmetic.
pub const SLACK: f64 = 1e-10;

/// Outcome of a sampled check: the worst excess over the allowed bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    /// Largest observed error (or bound violation; ≤ 0 means the bound held).
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }

    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            samples: 0,
            worst: f64::NEG_INFINITY,
            tolerance,
        }
    }

    fn record(&mut self, v: f64) {
        self.samples += 1;
        if v > self.worst || v.is_nan() {
            self.worst = if v.is_nan() { f64::INFINITY } else { v };
        }
    }
}

/// `count` points uniform in the cube of half-width `radius` around `center`.
pub fn sample_points<T: Real>(center: &DVector<T>, count: usize, radius: f64, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| center.map(|c| c + T::lit(rng.gen_range(-radius..=radius))))
        .collect()
}

fn fd_step<T: Real>(x: &DVector<T>) -> T {
    T::lit(1e-6) * (T::one() + x.norm())
}

/// Central-difference gradient of F's smooth part against the analytic one.
/// Error per point: ‖g_fd − g‖_∞ / max(1, ‖g‖_∞).
pub fn gradient_check<T: Real>(problem: &ProblemInstance<T>, points: &[DVector<T>]) -> Result<Check> {
    let reg = problem.require_regularized("gradient check")?;
    let mut check = Check::new("gradient", FD_TOLERANCE);
    for x in points {
        problem.check_dimension(x)?;
        let g = reg.objective.gradient(x);
        let h = fd_step(x);
        let fd = DVector::from_fn(x.len(), |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (reg.objective.value(&xp) - reg.objective.value(&xm)) / (h + h)
        });
        let scale = g.amax().as_f64().max(1.0);
        check.record((fd - &g).amax().as_f64() / scale);
    }
    Ok(check)
}

/// Central-difference check of the Jacobian of A (the Hessian of f for
/// regularized problems). Returns `None` when no Jacobian is supplied.
pub fn jacobian_check<T: Real>(problem: &ProblemInstance<T>, points: &[DVector<T>]) -> Result<Option<Check>> {
    let mut check = Check::new("jacobian", FD_TOLERANCE);
    for x in points {
        problem.check_dimension(x)?;
        let Some(j) = problem.jacobian(x) else { return Ok(None) };
        let h = fd_step(x);
        let n = x.len();
        let mut fd = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            fd.set_column(k, &((problem.forward(&xp) - problem.forward(&xm)) / (h + h)));
        }
        let scale = j.amax().as_f64().max(1.0);
        check.record((fd - &j).amax().as_f64() / scale);
    }
    Ok(Some(check))
}

/// ‖J(z₁) − J(z₂)‖² ≤ ⟨J(z₁) − J(z₂), z₁ − z₂⟩ for consecutive pairs of `points`.
pub fn firm_nonexpansiveness_check<T: Real>(problem: &ProblemInstance<T>, tau: T, points: &[DVector<T>]) -> Result<Check> {
    if !(tau > T::zero()) {
        return Err(Error::Parameter {
            name: "tau",
            value: tau.as_f64(),
            range: "(0, inf)",
        });
    }
    let mut check = Check::new("firm_nonexpansiveness", SLACK);
    for pair in points.chunks_exact(2) {
        let (z1, z2) = (&pair[0], &pair[1]);
        let dj = problem.resolvent(tau, z1) - problem.resolvent(tau, z2);
        let lhs = dj.norm_squared();
        let rhs = dj.dot(&(z1 - z2));
        check.record((lhs - rhs).as_f64());
    }
    Ok(check)
}

/// min(1, L)·r(x) ≤ ‖G_L(x)‖ ≤ max(1, L)·r(x); records the larger violation.
pub fn sandwich_check<T: Real>(problem: &ProblemInstance<T>, points: &[DVector<T>]) -> Result<Check> {
    let reg = problem.require_regularized("prox-gradient sandwich")?;
    let l = reg.lipschitz;
    let mut check = Check::new("prox_gradient_sandwich", SLACK);
    for x in points {
        let (_, r) = residual_fb(problem, x)?;
        let (g, _) = prox_gradient(reg, x)?;
        let gn = g.norm();
        let lower = l.min(T::one()) * r - gn;
        let upper = gn - l.max(T::one()) * r;
        check.record(lower.max(upper).as_f64());
    }
    Ok(check)
}

/// Smallest κ with dist(x) ≤ κ·r(x)^q over the points with r > 0.
///
/// Needs a distance oracle and an error-bound exponent q in the metadata.
pub fn empirical_kappa<T: Real>(problem: &ProblemInstance<T>, points: &[DVector<T>]) -> Result<f64> {
    let q = problem
        .metadata
        .eb_q
        .ok_or_else(|| Error::Analysis(format!("{} has no error-bound exponent", problem.name)))?;
    if problem.metadata.dist_oracle.is_none() {
        return Err(Error::Analysis(format!("{} has no distance oracle", problem.name)));
    }
    let mut kappa = 0f64;
    for x in points {
        let (_, r) = residual_fb(problem, x)?;
        let d = problem.distance(x).expect("oracle checked above");
        if r > T::zero() {
            kappa = kappa.max((d / r.powf(q)).as_f64());
        }
    }
    Ok(kappa)
}

/// Minimum-norm element of ∇f(x) + λ∂‖x‖₁.
pub fn min_norm_subgradient_l1<T: Real>(gradient: &DVector<T>, x: &DVector<T>, lambda: T) -> DVector<T> {
    gradient.zip_map(x, |g, xi| {
        if xi > T::zero() {
            g + lambda
        } else if xi < T::zero() {
            g - lambda
        } else {
            crate::problem::soft_threshold(g, lambda)
        }
    })
}

/// r(x) ≤ dist(0, ∂F(x)) for F = f + λ‖·‖₁, with the subgradient computed
/// in closed form. `lambda` must match the problem's regularizer.
pub fn subgradient_bound_check<T: Real>(problem: &ProblemInstance<T>, lambda: T, points: &[DVector<T>]) -> Result<Check> {
    let reg = problem.require_regularized("subgradient bound")?;
    let mut check = Check::new("subgradient_bound", SLACK);
    for x in points {
        let (_, r) = residual_fb(problem, x)?;
        let s = min_norm_subgradient_l1(&reg.objective.gradient(x), x, lambda);
        check.record((r - s.norm()).as_f64());
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnObjective, L1Norm, RegularizedProblem};

    fn wrong_gradient() -> ProblemInstance<f64> {
        let obj = FnObjective::new(|x: &DVector<f64>| x.norm_squared(), |x: &DVector<f64>| x.clone());
        ProblemInstance::regularized("wrong", RegularizedProblem::new(obj, L1Norm::new(0.1), 2.0), DVector::zeros(3))
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let p = wrong_gradient();
        let pts = sample_points(&p.start, 5, 1.0, 1);
        let c = gradient_check(&p, &pts).unwrap();
        assert!(!c.passed(), "{c:?}");
        assert_eq!(c.samples, 5);
    }

    #[test]
    fn subgradient_formula() {
        let g = DVector::from_vec(vec![0.3, -0.05, 0.5, 0.2]);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, -2.0]);
        let s = min_norm_subgradient_l1(&g, &x, 0.1);
        assert_eq!(s, DVector::from_vec(vec![0.4, 0.0, 0.4, 0.1]));
    }

    #[test]
    fn sample_points_are_reproducible() {
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let a = sample_points::<f64>(&c, 4, 0.5, 9);
        assert_eq!(a, sample_points(&c, 4, 0.5, 9));
        assert!(a.iter().all(|p| (p - &c).amax() <= 0.5));
    }
}
