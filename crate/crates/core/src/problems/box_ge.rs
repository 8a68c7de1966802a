use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{gaussian_matrix, gaussian_vector, mat_to_t, min_singular_value, orthonormal, rng, symmetrize, to_t};
use crate::error::{Error, Result};
use crate::problem::{BoxNormalCone, FnMap, GeneralizedEquation, ProblemInstance, ProblemMetadata};
use crate::scalar::Real;

/// Affine VI data with a planted, strictly complementary solution x*.
struct Planted {
    s: DMatrix<f64>,
    /// Orthonormal basis of range(S).
    range: DMatrix<f64>,
    m: DMatrix<f64>,
    c: DVector<f64>,
    x_star: DVector<f64>,
    free: Vec<usize>,
}

/// S = Q diag(λ) Qᵀ with rank ⌈n/2⌉ and λ ∈ [0.5, 2]; K = (G − Gᵀ)/(2√n) when
/// `skew`. A quarter of the coordinates of x* are free in (−0.5, 0.5); the
/// rest sit on the bounds with A(x*)_i of the strictly complementary sign.
fn plant(n: usize, skew: bool, rng: &mut ChaCha8Rng) -> Result<Planted> {
    let k = n.div_ceil(2);
    let q = orthonormal(rng, n, k);
    let lam = DVector::from_fn(k, |i, _| if k == 1 { 2.0 } else { 0.5 + 1.5 * i as f64 / (k - 1) as f64 });
    let s = symmetrize(&q * DMatrix::from_diagonal(&lam) * q.transpose());
    let m = if skew {
        let g = gaussian_matrix(rng, n, n);
        &s + (&g - g.transpose()) / (2.0 * (n as f64).sqrt())
    } else {
        s.clone()
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut free: Vec<usize> = idx[..(n / 4).max(1)].to_vec();
    free.sort_unstable();
    let mut x_star = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    for i in 0..n {
        if free.contains(&i) {
            x_star[i] = rng.gen_range(-0.5..0.5);
        } else {
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            x_star[i] = side;
            // at the upper bound A_i < 0, at the lower bound A_i > 0
            v[i] = -side * rng.gen_range(0.5..1.5);
        }
    }
    let m_ff = DMatrix::from_fn(free.len(), free.len(), |i, j| m[(free[i], free[j])]);
    if min_singular_value(&m_ff) <= 1e-8 {
        return Err(Error::Problem("planted solution is not isolated: M_FF is singular".into()));
    }
    let c = v - &m * &x_star;
    Ok(Planted {
        s,
        range: q,
        m,
        c,
        x_star,
        free,
    })
}

fn metadata<T: Real>(x_star: &DVector<f64>) -> ProblemMetadata<T> {
    let x_ref: DVector<T> = to_t(x_star);
    let anchor = x_ref.clone();
    ProblemMetadata {
        holder_p: Some(T::one()),
        eb_q: Some(T::one()),
        dist_oracle: Some(Arc::new(move |x: &DVector<T>| (x - &anchor).norm())),
        reference_solution: Some(x_ref),
        ..Default::default()
    }
}

/// Affine VI: find x with 0 ∈ Mx + c + N_[−1,1]ⁿ(x), M = S + K.
///
/// S is PSD and singular, K skew (only when `nonsymmetric`), so A is monotone
/// and ∇A = M is non-Hermitian with PSD symmetric part. The solution x* is
/// planted with free block F such that M_FF is nonsingular and strict
/// complementarity holds, which makes x* the unique solution; polyhedral
/// structure gives q = 1, and ∇A is constant (p = 1, ζ = 0).
/// Start: uniform in [−1, 1]ⁿ.
pub fn make_box_ge<T: Real>(n: usize, seed: u64, nonsymmetric: bool) -> Result<ProblemInstance<T>> {
    if n < 2 {
        return Err(Error::Problem(format!("box_ge needs n >= 2, got {n}")));
    }
    let mut rng = rng(seed);
    let planted = plant(n, nonsymmetric, &mut rng)?;
    let start: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
    let norm = planted.m.norm();
    let (m1, m2, c) = (mat_to_t::<T>(&planted.m), mat_to_t::<T>(&planted.m), to_t::<T>(&planted.c));
    let map = FnMap::new(move |x: &DVector<T>| &m1 * x + &c, move |_| m2.clone());
    let ge = GeneralizedEquation::new(
        map,
        BoxNormalCone {
            lower: -T::one(),
            upper: T::one(),
        },
        T::lit(norm),
    );
    let mut meta = metadata::<T>(&planted.x_star);
    meta.holder_zeta = Some(T::zero());
    Ok(ProblemInstance::equation(
        format!("box_ge(n={n},seed={seed},nonsymmetric={nonsymmetric})"),
        ge,
        start.map(T::lit),
    )
    .with_metadata(meta))
}

/// A(x) = Sx + c + ε·φ(x), φ(x) = −Q((Qᵀ(x − x*))³), on the box [−1, 1]ⁿ.
///
/// Q spans range(S), so ∇A(x*) = S is PSD and singular, while for large ε the
/// cubic term makes A nonmonotone away from x*. ∇A is smooth (p = 1). The
/// solution is planted as in [`make_box_ge`] (φ(x*) = 0); ε = 0 reduces to the
/// symmetric box problem. A witness pair (u, v) with ⟨A(u) − A(v), u − v⟩ < 0 is
/// searched for and stored when ε > 0. Start: x* + 0.05·N(0, I), clamped.
pub fn make_nonmonotone_ge<T: Real>(n: usize, eps: f64, seed: u64) -> Result<ProblemInstance<T>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            range: "[0, inf)",
        });
    }
    if n < 2 {
        return Err(Error::Problem(format!("nonmonotone_ge needs n >= 2, got {n}")));
    }
    let mut rng = rng(seed);
    let planted = plant(n, false, &mut rng)?;
    debug_assert!(!planted.free.is_empty());
    let noise = gaussian_vector(&mut rng, n);
    let start = (&planted.x_star + noise * 0.05).map(|v| v.clamp(-1.0, 1.0));

    let eval64 = {
        let (s, c, q, xs) = (planted.s.clone(), planted.c.clone(), planted.range.clone(), planted.x_star.clone());
        move |x: &DVector<f64>| -> DVector<f64> {
            let w = q.transpose() * (x - &xs);
            &s * x + &c - &q * w.map(|t| t * t * t) * eps
        }
    };
    let witness = (eps > 0.0).then(|| find_nonmonotone_pair(&eval64, n, &mut rng)).flatten();

    let s_t = mat_to_t::<T>(&planted.s);
    let c_t = to_t::<T>(&planted.c);
    let q_t = mat_to_t::<T>(&planted.range);
    let xs_t = to_t::<T>(&planted.x_star);
    let e = T::lit(eps);
    let three = T::lit(3.0);
    let (s1, c1, q1, x1) = (s_t.clone(), c_t, q_t.clone(), xs_t.clone());
    let (s2, q2, x2) = (s_t, q_t, xs_t);
    let map = FnMap::new(
        move |x: &DVector<T>| {
            let w = q1.tr_mul(&(x - &x1));
            &s1 * x + &c1 - &q1 * w.map(|t| t * t * t) * e
        },
        move |x: &DVector<T>| {
            let w = q2.tr_mul(&(x - &x2));
            let d = DMatrix::from_diagonal(&w.map(|t| three * t * t));
            &s2 - &q2 * d * q2.transpose() * e
        },
    );
    // ‖∇A‖ on the box: ‖S‖ + 3ε·max|Qᵀ(x − x*)|² ≤ ‖S‖ + 3ε·4n
    let lip = planted.s.norm() + 12.0 * eps * n as f64;
    let ge = GeneralizedEquation::new(
        map,
        BoxNormalCone {
            lower: -T::one(),
            upper: T::one(),
        },
        T::lit(lip),
    );
    let mut meta = metadata::<T>(&planted.x_star);
    meta.monotonicity_witness = witness.map(|(u, v)| (to_t(&u), to_t(&v)));
    Ok(ProblemInstance::equation(format!("nonmonotone_ge(n={n},eps={eps},seed={seed})"), ge, start.map(T::lit)).with_metadata(meta))
}

/// Randomized search over the box for ⟨A(u) − A(v), u − v⟩ < 0.
pub(crate) fn find_nonmonotone_pair(
    a: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(DVector<f64>, DVector<f64>)> {
    for _ in 0..2000 {
        let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
        if (a(&u) - a(&v)).dot(&(&u - &v)) < 0.0 {
            return Some((u, v));
        }
    }
    None
}
