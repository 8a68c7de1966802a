//! Built-in problems with known degeneracy exponents and solution oracles.
//!
//! Fixtures are constructed in `f64` and converted to the requested scalar.
//! Objectives are stored relative to a reference optimum (so F* = 0), which
//! keeps objective gaps near the solution resolvable in floating point.

mod box_ge;
mod holder;
mod lasso;
mod quadratic;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::problem::SmoothObjective;
use crate::scalar::Real;

pub use box_ge::{make_box_ge, make_nonmonotone_ge};
pub use holder::make_holder;
pub use lasso::{lasso_presolve, make_lasso_degenerate, LassoReference};
pub use quadratic::make_quadratic_singular;

/// f(x) = ⟨g, x − a⟩ + ½(x − a)ᵀG(x − a): a quadratic expanded about an anchor a.
#[derive(Clone, Debug)]
pub struct ShiftedQuadratic<T: Real> {
    pub gram: DMatrix<T>,
    pub anchor: DVector<T>,
    /// ∇f(anchor).
    pub anchor_grad: DVector<T>,
}

impl<T: Real> SmoothObjective<T> for ShiftedQuadratic<T> {
    fn value(&self, x: &DVector<T>) -> T {
        let e = x - &self.anchor;
        self.anchor_grad.dot(&e) + T::lit(0.5) * e.dot(&(&self.gram * &e))
    }
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        let e = x - &self.anchor;
        &self.anchor_grad + &self.gram * e
    }
    fn hessian(&self, _x: &DVector<T>) -> Option<DMatrix<T>> {
        Some(self.gram.clone())
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub(crate) fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// n×k matrix with orthonormal columns.
pub(crate) fn orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, k).qr().q();
    q.columns(0, k).into_owned()
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

pub(crate) fn to_t<T: Real>(v: &DVector<f64>) -> DVector<T> {
    v.map(T::lit)
}

pub(crate) fn mat_to_t<T: Real>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::lit)
}

pub(crate) fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    m.singular_values().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_columns() {
        let q = orthonormal(&mut rng(3), 7, 4);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn shifted_quadratic_matches_expanded_form() {
        let gram = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let anchor = DVector::from_vec(vec![1.0, -1.0]);
        let b = DVector::from_vec(vec![0.3, 0.7]);
        // f(x) = ½xᵀGx − bᵀx, shifted by f(anchor)
        let plain = |x: &DVector<f64>| 0.5 * x.dot(&(&gram * x)) - b.dot(x);
        let q = ShiftedQuadratic {
            gram: gram.clone(),
            anchor: anchor.clone(),
            anchor_grad: &gram * &anchor - &b,
        };
        let x = DVector::from_vec(vec![0.2, 0.4]);
        assert!((q.value(&x) - (plain(&x) - plain(&anchor))).abs() < 1e-14);
        assert!((q.gradient(&x) - (&gram * &x - &b)).amax() < 1e-14);
    }
}
