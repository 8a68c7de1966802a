use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{gaussian_vector, mat_to_t, orthonormal, rng, symmetrize, to_t, ShiftedQuadratic};
use crate::error::{Error, Result};
use crate::problem::{ProblemInstance, ProblemMetadata, RegularizedProblem, ZeroRegularizer};
use crate::scalar::Real;

/// f(x) = ½xᵀMx − bᵀx with M = Q_r diag(λ) Q_rᵀ of the given rank and b = M x_ref.
///
/// Eigenvalues λ lie in [0.5, 4]. The solution set is x_ref + ker M, so
/// dist(x) = ‖Q_r Q_rᵀ(x − x_ref)‖ and r(x) = ‖Mx − b‖ ≥ λ_min·dist(x):
/// q = 1 with κ = 1/λ_min, and ∇f is linear (p = 1, ζ = 0). The stored
/// objective is f − f*, so F* = 0. `rank = n` gives a nondegenerate problem.
/// Start: x0 = 0.
pub fn make_quadratic_singular<T: Real>(n: usize, rank: usize, seed: u64) -> Result<ProblemInstance<T>> {
    if n == 0 || rank == 0 || rank > n {
        return Err(Error::Problem(format!(
            "quadratic_singular needs 1 <= rank <= n, got rank = {rank}, n = {n}"
        )));
    }
    let mut rng = rng(seed);
    let q = orthonormal(&mut rng, n, rank);
    let lambdas: Vec<f64> = (0..rank)
        .map(|i| if rank == 1 { 4.0 } else { 0.5 + 3.5 * i as f64 / (rank - 1) as f64 })
        .collect();
    let lam = DVector::from_vec(lambdas);
    let m = symmetrize(&q * DMatrix::from_diagonal(&lam) * q.transpose());
    let x_ref = gaussian_vector(&mut rng, n);
    let lmax = lam.max();
    let lmin = lam.min();

    let proj: DMatrix<T> = mat_to_t(&(&q * q.transpose()));
    let x_ref_t: DVector<T> = to_t(&x_ref);
    let anchor = x_ref_t.clone();
    let dist = Arc::new(move |x: &DVector<T>| (&proj * (x - &anchor)).norm());
    let objective = ShiftedQuadratic {
        gram: mat_to_t(&m),
        anchor: x_ref_t.clone(),
        anchor_grad: DVector::zeros(n),
    };
    let problem = RegularizedProblem::new(objective, ZeroRegularizer, T::lit(lmax));
    let metadata = ProblemMetadata {
        holder_p: Some(T::one()),
        holder_zeta: Some(T::zero()),
        eb_q: Some(T::one()),
        eb_kappa: Some(T::lit(1.0 / lmin)),
        dist_oracle: Some(dist),
        f_star: Some(T::zero()),
        reference_solution: Some(x_ref_t),
        ..Default::default()
    };
    Ok(ProblemInstance::regularized(
        format!("quadratic_singular(n={n},rank={rank},seed={seed})"),
        problem,
        DVector::zeros(n),
    )
    .with_metadata(metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::residual_fb;
    use crate::problem::Splitting;

    #[test]
    fn rank_bounds() {
        assert!(make_quadratic_singular::<f64>(5, 0, 1).is_err());
        assert!(make_quadratic_singular::<f64>(5, 6, 1).is_err());
        assert!(make_quadratic_singular::<f64>(5, 5, 1).is_ok());
    }

    #[test]
    fn oracle_and_residual() {
        let p = make_quadratic_singular::<f64>(8, 3, 11).unwrap();
        let x_ref = p.metadata.reference_solution.clone().unwrap();
        assert_eq!(p.distance(&x_ref), Some(0.0));
        let (_, r) = residual_fb(&p, &x_ref).unwrap();
        assert_eq!(r, 0.0);
        // any point of x_ref + ker M is a solution
        let m = p.jacobian(&x_ref).unwrap();
        let kernel = m.clone().svd(false, true).v_t.unwrap().row(7).transpose();
        let x = &x_ref + kernel * 2.0;
        assert!(p.distance(&x).unwrap() < 1e-12);
        // r(x) = ‖Mx − b‖ with b = M x_ref
        let y = DVector::from_fn(8, |i, _| (i as f64).sin());
        let b = &m * &x_ref;
        let (_, r) = residual_fb(&p, &y).unwrap();
        assert!((r - (&m * &y - b).norm()).abs() < 1e-12);
        // error bound with κ = 1/λ_min
        assert!(p.distance(&y).unwrap() <= p.metadata.eb_kappa.unwrap() * r * (1.0 + 1e-12));
    }

    #[test]
    fn seeds_are_deterministic() {
        let a = make_quadratic_singular::<f64>(6, 2, 5).unwrap();
        let b = make_quadratic_singular::<f64>(6, 2, 5).unwrap();
        let c = make_quadratic_singular::<f64>(6, 2, 6).unwrap();
        let x = DVector::from_element(6, 0.3);
        assert_eq!(a.objective(&x), b.objective(&x));
        assert_ne!(a.objective(&x), c.objective(&x));
    }
}
