//! Post-hoc analysis: rate regions, fitted convergence orders and trace audits.

pub mod audit;
pub mod rate;
pub mod region;

pub use audit::{audit_trace, Rule, Violation};
pub use rate::{estimate_rate, estimate_rate_from, RateEstimate, DEFAULT_FLOOR};
pub use region::{check_region, delta_min_ok, q_threshold_lipschitz, rho_at_threshold, RegionReport};
