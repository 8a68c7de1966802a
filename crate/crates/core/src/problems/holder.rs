use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::rng;
use crate::error::{Error, Result};
use crate::problem::{FnObjective, L1Norm, ProblemInstance, ProblemMetadata, RegularizedProblem, ZeroRegularizer};
use crate::scalar::Real;

/// f(x) = ½‖x‖² + Σ|x_i|^{1+γ}, optionally plus λ‖x‖₁; unique solution x* = 0.
///
/// ∇²f = diag(1 + γ(1+γ)|x_i|^{γ−1}) is (γ−1)-Hölder with ζ = γ(1+γ) and not
/// Lipschitz at 0. ∇f(x)_i has the sign of x_i with |∇f(x)_i| ≥ |x_i|, so
/// dist(x) = ‖x‖ ≤ r(x): q = 1, κ = 1. L bounds the Hessian on the level set
/// of F(x0), where |x_i| ≤ sqrt(2F(x0)). Start: uniform in [−0.5, 0.5]ⁿ.
pub fn make_holder<T: Real>(n: usize, gamma: f64, seed: u64, lambda: Option<f64>) -> Result<ProblemInstance<T>> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(Error::Parameter {
            name: "gamma",
            value: gamma,
            range: "(1, 2)",
        });
    }
    if n == 0 {
        return Err(Error::Dimension { expected: 1, found: 0 });
    }
    let lambda = lambda.filter(|l| *l != 0.0);
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Parameter {
                name: "lambda",
                value: l,
                range: "[0, inf)",
            });
        }
    }
    let mut rng = rng(seed);
    let start: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..=0.5));

    let g = T::lit(gamma);
    let one = T::one();
    let half = T::lit(0.5);
    let objective = FnObjective::new(
        move |x: &DVector<T>| x.iter().fold(T::zero(), |s, &v| s + half * v * v + v.abs().powf(one + g)),
        move |x: &DVector<T>| x.map(|v| v + (one + g) * signum(v) * v.abs().powf(g)),
    )
    .with_hessian(move |x: &DVector<T>| DMatrix::from_diagonal(&x.map(|v| one + g * (one + g) * v.abs().powf(g - one))));

    let f0: f64 = start.iter().map(|v| 0.5 * v * v + v.abs().powf(1.0 + gamma)).sum::<f64>()
        + lambda.map_or(0.0, |l| l * start.iter().map(|v| v.abs()).sum::<f64>());
    let l = 1.0 + gamma * (1.0 + gamma) * (2.0 * f0).sqrt().powf(gamma - 1.0);
    let problem = match lambda {
        Some(lam) => RegularizedProblem::new(objective, L1Norm::new(T::lit(lam)), T::lit(l)),
        None => RegularizedProblem::new(objective, ZeroRegularizer, T::lit(l)),
    };
    let metadata = ProblemMetadata {
        holder_p: Some(T::lit(gamma - 1.0)),
        holder_zeta: Some(T::lit(gamma * (1.0 + gamma))),
        eb_q: Some(T::one()),
        eb_kappa: Some(T::one()),
        dist_oracle: Some(Arc::new(|x: &DVector<T>| x.norm())),
        f_star: Some(T::zero()),
        reference_solution: Some(DVector::zeros(n)),
        ..Default::default()
    };
    let name = match lambda {
        Some(l) => format!("holder(n={n},gamma={gamma},lambda={l},seed={seed})"),
        None => format!("holder(n={n},gamma={gamma},seed={seed})"),
    };
    Ok(ProblemInstance::regularized(name, problem, start.map(T::lit)).with_metadata(metadata))
}

fn signum<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
