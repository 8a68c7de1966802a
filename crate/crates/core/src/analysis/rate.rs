use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trace::IterateTrace;

/// Default accuracy floor: 100× the reference-solution accuracy.
pub const DEFAULT_FLOOR: f64 = 1e-11;
/// Upper end of the fitting window.
pub const WINDOW_CEILING: f64 = 1e-2;
/// Rows above the floor required before fitting.
pub const MIN_ROWS: usize = 5;
/// Points required inside the window.
pub const MIN_WINDOW: usize = 3;

/// Least-squares fit of ln r_{t+1} = a + ω·ln r_t over the tail of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    /// Fitted slope ω.
    pub q_order: f64,
    pub intercept: f64,
    /// First and last t of the window's residuals.
    pub window: (usize, usize),
    /// Points r_t in the window (pairs fitted = points − 1).
    pub points: usize,
    /// Root-mean-square residual of the fit in log space.
    pub residual_of_fit: f64,
    /// r_{t+1}/r_t over the window.
    pub ratio_sequence: Vec<f64>,
}

/// Fits the convergence order of a residual sequence.
///
/// The window is the maximal set of consecutive pairs (r_t, r_{t+1}) with
/// r_t ∈ (floor, 1e-2] and r_{t+1} > floor. At least [`MIN_ROWS`] residuals
/// must exceed the floor and the window must hold [`MIN_WINDOW`] points.
pub fn estimate_rate_from(residuals: &[f64], floor: f64) -> Result<RateEstimate> {
    if !(floor >= 0.0) {
        return Err(Error::Analysis(format!("rate floor must be nonnegative, got {floor}")));
    }
    let above = residuals.iter().filter(|&&r| r > floor).count();
    if above < MIN_ROWS {
        return Err(Error::Analysis(format!(
            "rate estimation needs at least {MIN_ROWS} residuals above the floor {floor:e}, found {above}"
        )));
    }
    let in_window = |r: f64| r > floor && r <= WINDOW_CEILING;
    let pairs: Vec<usize> = (0..residuals.len().saturating_sub(1))
        .filter(|&t| in_window(residuals[t]) && residuals[t + 1] > floor)
        .collect();
    if pairs.len() + 1 < MIN_WINDOW {
        return Err(Error::Analysis(format!(
            "rate window (floor {floor:e}, ceiling {WINDOW_CEILING:e}) holds {} points, at least {MIN_WINDOW} needed",
            if pairs.is_empty() { 0 } else { pairs.len() + 1 }
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|&t| residuals[t].ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&t| residuals[t + 1].ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Analysis("rate window has no spread in ln r_t".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(RateEstimate {
        q_order: slope,
        intercept,
        window: (pairs[0], pairs[pairs.len() - 1] + 1),
        points: pairs.len() + 1,
        residual_of_fit: (rss / k).sqrt(),
        ratio_sequence: pairs.iter().map(|&t| residuals[t + 1] / residuals[t]).collect(),
    })
}

/// [`estimate_rate_from`] applied to a trace's residual column.
pub fn estimate_rate<T: Real>(trace: &IterateTrace<T>, floor: f64) -> Result<RateEstimate> {
    let rs: Vec<f64> = trace.residuals().into_iter().map(|r| r.as_f64()).collect();
    let est = estimate_rate_from(&rs, floor)?;
    let t0 = trace.rows()[est.window.0].t;
    let t1 = trace.rows()[est.window.1].t;
    Ok(RateEstimate { window: (t0, t1), ..est })
}
