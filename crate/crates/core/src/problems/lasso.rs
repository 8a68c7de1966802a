use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{gaussian_matrix, gaussian_vector, mat_to_t, min_singular_value, orthonormal, rng, to_t, ShiftedQuadratic};
use crate::error::{Error, Result};
use crate::problem::{soft_threshold, L1Norm, ProblemInstance, ProblemMetadata, RegularizedProblem};
use crate::scalar::Real;

/// Accuracy the reference solution must reach, in r(x_ref).
pub const REFERENCE_ACCURACY: f64 = 1e-13;

/// Result of the lasso pre-solve.
#[derive(Clone, Debug)]
pub struct LassoReference {
    pub x: DVector<f64>,
    /// r(x) measured for the unshifted objective.
    pub residual: f64,
    pub support: Vec<usize>,
    /// Support has full column rank and strict complementarity holds, so the
    /// solution is unique.
    pub unique: bool,
}

fn lasso_residual(gram: &DMatrix<f64>, dtb: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    let g = gram * x - dtb;
    (x - (x - g).map(|z| soft_threshold(z, lambda))).norm()
}

/// Solves min ½‖Dx − b‖² + λ‖x‖₁ to r ≤ 1e-13 without using the Newton solvers:
/// FISTA identifies the support, then the optimality system on the support
/// D_Sᵀ D_S x_S = D_Sᵀ b − λ·sign(x_S) is solved directly.
pub fn lasso_presolve(d: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<LassoReference> {
    let n = d.ncols();
    let gram = d.transpose() * d;
    let dtb = d.transpose() * b;
    let l = gram.symmetric_eigenvalues().max().max(f64::MIN_POSITIVE);
    let mut x = DVector::zeros(n);
    let mut y = x.clone();
    let mut s = 1.0f64;
    let mut attempt = None;
    for k in 1..=200_000 {
        let g = &gram * &y - &dtb;
        let x_next = (&y - g / l).map(|z| soft_threshold(z, lambda / l));
        let s_next = 0.5 * (1.0 + (1.0 + 4.0 * s * s).sqrt());
        y = &x_next + (&x_next - &x) * ((s - 1.0) / s_next);
        s = s_next;
        x = x_next;
        if k % 500 == 0 {
            if let Some(polished) = polish(&gram, &dtb, lambda, &x) {
                attempt = Some(polished);
                break;
            }
        }
    }
    let x = attempt.ok_or_else(|| Error::Problem("lasso pre-solve did not reach the reference accuracy".into()))?;
    let residual = lasso_residual(&gram, &dtb, lambda, &x);
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let g = &gram * &x - &dtb;
    let strict = (0..n).filter(|i| !support.contains(i)).all(|i| g[i].abs() < lambda * (1.0 - 1e-6));
    let ds = d.select_columns(support.iter());
    let unique = strict && min_singular_value(&ds) > 1e-8;
    Ok(LassoReference {
        x,
        residual,
        support,
        unique,
    })
}

/// Re-solves the optimality conditions on the support of x; succeeds when the
/// polished point keeps its signs and certifies r ≤ [`REFERENCE_ACCURACY`].
fn polish(gram: &DMatrix<f64>, dtb: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = x.amax();
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > 1e-9 * scale.max(1.0)).collect();
    let mut out = DVector::zeros(x.len());
    if !support.is_empty() {
        let k = support.len();
        let gss = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
        let rhs = DVector::from_fn(k, |i, _| dtb[support[i]] - lambda * x[support[i]].signum());
        let xs = gss.cholesky()?.solve(&rhs);
        for (i, &j) in support.iter().enumerate() {
            if xs[i].signum() != x[j].signum() {
                return None;
            }
            out[j] = xs[i];
        }
    }
    (lasso_residual(gram, dtb, lambda, &out) <= REFERENCE_ACCURACY).then_some(out)
}

/// f(x) = ½‖Dx − b‖², Ψ = λ‖x‖₁ with D = UΣVᵀ of rank `rank`, σ ∈ [0.5, 3].
///
/// b = D·x_gen + 0.01·noise with x_gen supported on ⌈rank/5⌉ coordinates. f is
/// quadratic and Ψ polyhedral, so the Luo–Tseng bound gives q = 1; p = 1 with
/// ζ = 0. L = σ_max². The stored objective is F − F* about a pre-solved
/// reference (F* = 0). dist is reported only when the reference is certified
/// unique (full-rank support, strict complementarity). Start: x0 = 0.
pub fn make_lasso_degenerate<T: Real>(m: usize, n: usize, rank: usize, lambda: f64, seed: u64) -> Result<ProblemInstance<T>> {
    if m == 0 || n == 0 {
        return Err(Error::Dimension { expected: 1, found: 0 });
    }
    if rank == 0 || rank > m.min(n) {
        return Err(Error::Problem(format!(
            "lasso rank must lie in [1, min(m, n)] = [1, {}], got {rank}",
            m.min(n)
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter {
            name: "lambda",
            value: lambda,
            range: "(0, inf)",
        });
    }
    let mut rng = rng(seed);
    let u = orthonormal(&mut rng, m, rank);
    let v = orthonormal(&mut rng, n, rank);
    let sigma = DVector::from_fn(rank, |i, _| if rank == 1 { 3.0 } else { 3.0 - 2.5 * i as f64 / (rank - 1) as f64 });
    let d = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
    let mut x_gen = DVector::zeros(n);
    let k = rank.div_ceil(5);
    let signal = gaussian_vector(&mut rng, k);
    for (i, val) in signal.iter().enumerate() {
        x_gen[(i * n) / k] = *val;
    }
    let noise = gaussian_matrix(&mut rng, m, 1).column(0).into_owned();
    let b = &d * &x_gen + noise * 0.01;

    let reference = lasso_presolve(&d, &b, lambda)?;
    let gram = d.transpose() * &d;
    let x_ref = reference.x.clone();
    let anchor_grad = &gram * &x_ref - d.transpose() * &b;
    let l = sigma.max().powi(2);

    let x_ref_t: DVector<T> = to_t(&x_ref);
    let objective = ShiftedQuadratic {
        gram: mat_to_t(&gram),
        anchor: x_ref_t.clone(),
        anchor_grad: to_t(&anchor_grad),
    };
    let regularizer = L1Norm::new(T::lit(lambda)).relative_to(x_ref_t.clone());
    let problem = RegularizedProblem::new(objective, regularizer, T::lit(l));
    let dist = reference.unique.then(|| {
        let anchor = x_ref_t.clone();
        Arc::new(move |x: &DVector<T>| (x - &anchor).norm()) as crate::problem::DistanceOracle<T>
    });
    let metadata = ProblemMetadata {
        holder_p: Some(T::one()),
        holder_zeta: Some(T::zero()),
        eb_q: Some(T::one()),
        dist_oracle: dist,
        f_star: Some(T::zero()),
        reference_solution: Some(x_ref_t),
        ..Default::default()
    };
    Ok(ProblemInstance::regularized(
        format!("lasso_degenerate(m={m},n={n},rank={rank},lambda={lambda},seed={seed})"),
        problem,
        DVector::zeros(n),
    )
    .with_metadata(metadata))
}
