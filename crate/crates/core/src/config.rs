//! Solver parameters and their validation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the damping μ_t is derived from the residual r_t.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingMode {
    /// μ_t = c·r_t^ρ.
    #[default]
    Power,
    /// μ_t = c·ω(r_t) for a configured modulus of continuity ω.
    Modulus,
}

/// Inner iteration used to solve the per-step subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Plain forward-backward iteration.
    ForwardBackward,
    /// Forward-backward with momentum and function-value restart (optimization only).
    Accelerated,
    /// Tseng's forward-backward-forward iteration, valid for non-symmetric metrics.
    ForwardBackwardForward,
}

/// Modulus of continuity used by [`DampingMode::Modulus`].
#[derive(Clone)]
pub enum Modulus<T: Real> {
    /// ω(s) = s^a, a ∈ (0, 1].
    Power {
        exponent: T,
    },
    /// ω(s) = 1 / (1 + ln(1 + 1/s)), ω(0) = 0.
    Logarithmic,
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> fmt::Debug for Modulus<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Power { exponent } => write!(f, "Power({exponent})"),
            Modulus::Logarithmic => f.write_str("Logarithmic"),
            Modulus::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl<T: Real> Modulus<T> {
    pub fn eval(&self, s: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        match self {
            Modulus::Power { exponent } => s.powf(*exponent),
            Modulus::Logarithmic => T::one() / (T::one() + (T::one() + T::one() / s).ln()),
            Modulus::Custom(w) => w(s),
        }
    }

    /// Checks ω(0) = 0, monotonicity and subadditivity on a log-spaced grid.
    pub fn validate(&self) -> Result<()> {
        if let Modulus::Power { exponent } = self {
            let a = exponent.as_f64();
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Parameter {
                    name: "modulus.exponent",
                    value: a,
                    range: "(0, 1]",
                });
            }
        }
        let zero = self.eval(T::zero());
        if zero != T::zero() {
            return Err(Error::Config(format!("modulus must vanish at zero, got {zero}")));
        }
        let grid: Vec<T> = (0..=64).map(|k| T::lit(10f64.powf(-16.0 + 20.0 * k as f64 / 64.0))).collect();
        let slack = T::lit(1e-12);
        let mut prev = T::zero();
        for &s in &grid {
            let w = self.eval(s);
            if !w.is_finite() || w < prev - slack * prev.abs() {
                return Err(Error::Config(format!("modulus is not nondecreasing near s = {s}")));
            }
            prev = w;
        }
        for &a in &grid {
            for &b in &grid {
                let lhs = self.eval(a + b);
                let rhs = self.eval(a) + self.eval(b);
                if lhs > rhs + slack * rhs.abs() {
                    return Err(Error::Config(format!("modulus is not subadditive at ({a}, {b}): {lhs} > {rhs}")));
                }
            }
        }
        Ok(())
    }
}

/// Serializable description of a built-in modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModulusSpec {
    Power { exponent: f64 },
    Logarithmic,
}

impl ModulusSpec {
    pub fn to_modulus<T: Real>(self) -> Modulus<T> {
        match self {
            ModulusSpec::Power { exponent } => Modulus::Power {
                exponent: T::lit(exponent),
            },
            ModulusSpec::Logarithmic => Modulus::Logarithmic,
        }
    }
}

/// Raw, optional solver parameters; unset fields take documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub c_bar: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub r_tol: Option<f64>,
    pub tol_floor: Option<f64>,
    pub damping: Option<DampingMode>,
    pub modulus: Option<ModulusSpec>,
    pub inner: Option<InnerMethod>,
    pub relaxed_acceptance: Option<bool>,
    pub jacobian_perturbation: Option<f64>,
}

/// Validated solver configuration.
///
/// Fields are public for inspection; anything built outside [`SolverConfig::new`]
/// is re-checked by the solvers through [`SolverConfig::validate`].
#[derive(Clone, Debug)]
pub struct SolverConfig<T: Real> {
    pub c: T,
    pub rho: T,
    pub nu: T,
    pub theta: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
    pub sigma: T,
    /// Objective cap for the hybrid rule; `None` means F(x0) + 1.
    pub c_bar: Option<T>,
    pub max_outer: usize,
    pub max_inner: usize,
    pub r_tol: T,
    /// Absolute floor on the inexactness tolerance (scaled by max(1, r_t)).
    pub tol_floor: T,
    pub damping_mode: DampingMode,
    pub modulus: Option<Modulus<T>>,
    /// Inner method override; `None` picks per problem kind.
    pub inner: Option<InnerMethod>,
    /// Use min{‖p‖², ‖p‖^{2+δ}} in the strict-decrease test.
    pub relaxed_acceptance: bool,
    /// Magnitude η of the PSD perturbation η·r_t^θ·P added to J_t.
    pub jacobian_perturbation: Option<T>,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self::new(&SolverParams::default()).expect("defaults are valid")
    }
}

fn open_closed(name: &'static str, v: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if v > lo && v <= hi {
        Ok(())
    } else {
        Err(Error::Parameter { name, value: v, range })
    }
}

fn open(name: &'static str, v: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::Parameter { name, value: v, range })
    }
}

impl<T: Real> SolverConfig<T> {
    /// Builds a configuration from raw parameters, filling defaults and
    /// checking every range constraint.
    pub fn new(params: &SolverParams) -> Result<Self> {
        let rho = params.rho.unwrap_or(0.5);
        let cfg = SolverConfig {
            c: T::lit(params.c.unwrap_or(1.0)),
            rho: T::lit(rho),
            nu: T::lit(params.nu.unwrap_or(0.1)),
            theta: T::lit(params.theta.unwrap_or(rho)),
            beta: T::lit(params.beta.unwrap_or(0.5)),
            gamma: T::lit(params.gamma.unwrap_or(1e-3)),
            delta: T::lit(params.delta.unwrap_or(2.0)),
            sigma: T::lit(params.sigma.unwrap_or(0.5)),
            c_bar: params.c_bar.map(T::lit),
            max_outer: params.max_outer.unwrap_or(200),
            max_inner: params.max_inner.unwrap_or(50_000),
            r_tol: T::lit(params.r_tol.unwrap_or(1e-12)),
            tol_floor: T::lit(params.tol_floor.unwrap_or(1e-14)),
            damping_mode: params.damping.unwrap_or_default(),
            modulus: params.modulus.map(ModulusSpec::to_modulus),
            inner: params.inner,
            relaxed_acceptance: params.relaxed_acceptance.unwrap_or(false),
            jacobian_perturbation: params.jacobian_perturbation.map(T::lit),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let f = |v: T| v.as_f64();
        if !(f(self.c) > 0.0 && f(self.c).is_finite()) {
            return Err(Error::Parameter {
                name: "c",
                value: f(self.c),
                range: "(0, inf)",
            });
        }
        open_closed("rho", f(self.rho), 0.0, 1.0, "(0, 1]")?;
        let nu = f(self.nu);
        if !(0.0..1.0).contains(&nu) {
            return Err(Error::Parameter {
                name: "nu",
                value: nu,
                range: "[0, 1)",
            });
        }
        if !(f(self.theta) >= f(self.rho)) {
            return Err(Error::Parameter {
                name: "theta",
                value: f(self.theta),
                range: "[rho, inf)",
            });
        }
        open("beta", f(self.beta), 0.0, 1.0, "(0, 1)")?;
        open("gamma", f(self.gamma), 0.0, 1.0, "(0, 1)")?;
        if !(f(self.delta) >= 0.0 && f(self.delta).is_finite()) {
            return Err(Error::Parameter {
                name: "delta",
                value: f(self.delta),
                range: "[0, inf)",
            });
        }
        open("sigma", f(self.sigma), 0.0, 1.0, "(0, 1)")?;
        if let Some(cb) = self.c_bar {
            if !cb.is_finite() {
                return Err(Error::Parameter {
                    name: "c_bar",
                    value: f(cb),
                    range: "finite reals",
                });
            }
        }
        if self.max_outer == 0 {
            return Err(Error::Parameter {
                name: "max_outer",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if self.max_inner == 0 {
            return Err(Error::Parameter {
                name: "max_inner",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if !(f(self.r_tol) > 0.0) {
            return Err(Error::Parameter {
                name: "r_tol",
                value: f(self.r_tol),
                range: "(0, inf)",
            });
        }
        if !(f(self.tol_floor) >= 0.0) {
            return Err(Error::Parameter {
                name: "tol_floor",
                value: f(self.tol_floor),
                range: "[0, inf)",
            });
        }
        if let Some(eta) = self.jacobian_perturbation {
            if !(f(eta) >= 0.0) {
                return Err(Error::Parameter {
                    name: "jacobian_perturbation",
                    value: f(eta),
                    range: "[0, inf)",
                });
            }
        }
        if let Some(m) = &self.modulus {
            m.validate()?;
        }
        Ok(())
    }

    /// Registers a modulus for [`DampingMode::Modulus`] after checking it.
    pub fn with_modulus(mut self, modulus: Modulus<T>) -> Result<Self> {
        modulus.validate()?;
        self.damping_mode = DampingMode::Modulus;
        self.modulus = Some(modulus);
        Ok(self)
    }

    /// Damping μ_t for the residual r_t.
    pub fn damping(&self, r: T) -> Result<T> {
        match self.damping_mode {
            DampingMode::Power => Ok(self.c * r.powf(self.rho)),
            DampingMode::Modulus => {
                let w = self
                    .modulus
                    .as_ref()
                    .ok_or_else(|| Error::Config("modulus damping selected but no modulus configured".into()))?;
                Ok(self.c * w.eval(r))
            }
        }
    }
}

/// Builds a validated configuration; shorthand for [`SolverConfig::new`].
pub fn make_config<T: Real>(params: &SolverParams) -> Result<SolverConfig<T>> {
    SolverConfig::new(params)
}
