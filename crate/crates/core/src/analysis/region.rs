use serde::Serialize;

use crate::error::{Error, Result};

/// Feasibility of the two rate regimes for exponents (p, q, ρ).
///
/// The Q-superlinear system asks
/// `(1+ρ)q > 1`, `(1+p)q > 1`, `(q + pq − ρ)(1+p) > 1`, with gap
/// `s = min{(1+ρ)q, (1+p)q, (q+pq−ρ)(1+p)} − 1`. The R-superlinear system
/// replaces the first condition by `ρ + q > 1` and asks `ρ > 0`, with
/// `s̄ = min{(1+p)q, (q+pq−ρ)(1+p), ρ+q, 1+ρ} − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    pub feasible_q: bool,
    pub feasible_r: bool,
    pub s: Option<f64>,
    pub s_bar: Option<f64>,
}

impl RegionReport {
    /// δ > 1/q − 1 and 2 + δ ≥ (1+p)(1+q).
    pub fn delta_min_ok(&self, delta: f64) -> bool {
        delta_min_ok(self.p, self.q, delta)
    }
}

pub fn delta_min_ok(p: f64, q: f64, delta: f64) -> bool {
    delta > 1.0 / q - 1.0 && 2.0 + delta >= (1.0 + p) * (1.0 + q)
}

/// Smallest q admitting the Q-superlinear regime when p = 1: (√33 − 1)/8.
pub fn q_threshold_lipschitz() -> f64 {
    (33f64.sqrt() - 1.0) / 8.0
}

/// The ρ attaining [`q_threshold_lipschitz`]: (√33 − 3)/4.
pub fn rho_at_threshold() -> f64 {
    (33f64.sqrt() - 3.0) / 4.0
}

/// Margin by which a left-hand side must exceed its bound. Inputs are decimal
/// literals, so boundary cases such as (1.1 − 0.6)·2 = 1 would otherwise be
/// decided by binary rounding.
pub const STRICT_MARGIN: f64 = 1e-12;

/// Evaluates both systems; boundary cases within [`STRICT_MARGIN`] fail.
pub fn check_region(p: f64, q: f64, rho: f64) -> Result<RegionReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Analysis(format!("p = {p} is outside (0, 1]")));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Analysis(format!("q = {q} is outside (0, 1]")));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Analysis(format!("rho = {rho} must be a finite nonnegative number")));
    }
    let a = (1.0 + rho) * q;
    let b = (1.0 + p) * q;
    let c = (q + p * q - rho) * (1.0 + p);
    let d = rho + q;
    let gt = |v: f64| v > 1.0 + STRICT_MARGIN;
    let feasible_q = gt(a) && gt(b) && gt(c);
    let feasible_r = gt(b) && gt(c) && gt(d) && rho > 0.0;
    Ok(RegionReport {
        p,
        q,
        rho,
        feasible_q,
        feasible_r,
        s: feasible_q.then(|| a.min(b).min(c) - 1.0),
        s_bar: feasible_r.then(|| b.min(c).min(d).min(1.0 + rho) - 1.0),
    })
}
