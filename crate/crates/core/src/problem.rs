//! Problem descriptions: the regularized objective F = f + Ψ and the
//! generalized equation 0 ∈ A(x) + B(x).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smooth part f of a regularized objective.
pub trait SmoothObjective<T: Real>: Send + Sync {
    fn value(&self, x: &DVector<T>) -> T;
    fn gradient(&self, x: &DVector<T>) -> DVector<T>;
    fn hessian(&self, _x: &DVector<T>) -> Option<DMatrix<T>> {
        None
    }
}

/// Convex, closed, proper regularizer Ψ with a computable prox.
pub trait Regularizer<T: Real>: Send + Sync {
    /// Ψ(x); may be +∞ outside the domain.
    fn value(&self, x: &DVector<T>) -> T;
    /// prox_{τΨ}(z).
    fn prox(&self, tau: T, z: &DVector<T>) -> DVector<T>;
    /// Ψ(x) − Ψ(y). Implementations may override to avoid cancellation.
    fn value_difference(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        self.value(x) - self.value(y)
    }
    /// True for Ψ ≡ 0, whose prox is the identity.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Single-valued smooth map A.
pub trait SmoothMap<T: Real>: Send + Sync {
    fn eval(&self, x: &DVector<T>) -> DVector<T>;
    fn jacobian(&self, x: &DVector<T>) -> DMatrix<T>;
}

/// Maximal monotone operator B, accessed through its resolvent.
pub trait MonotoneOperator<T: Real>: Send + Sync {
    /// (Id + τB)^{-1}(z).
    fn resolvent(&self, tau: T, z: &DVector<T>) -> DVector<T>;
    /// True for B ≡ 0.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Ψ ≡ 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroRegularizer;

impl<T: Real> Regularizer<T> for ZeroRegularizer {
    fn value(&self, _x: &DVector<T>) -> T {
        T::zero()
    }
    fn prox(&self, _tau: T, z: &DVector<T>) -> DVector<T> {
        z.clone()
    }
    fn value_difference(&self, _x: &DVector<T>, _y: &DVector<T>) -> T {
        T::zero()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

#[inline]
pub fn soft_threshold<T: Real>(z: T, k: T) -> T {
    if z > k {
        z - k
    } else if z < -k {
        z + k
    } else {
        T::zero()
    }
}

/// Ψ(x) = λ‖x‖₁, optionally reported relative to λ‖x_ref‖₁.
///
/// The offset leaves the prox untouched; it only shifts the reported value
/// so objective gaps near a reference optimum stay resolvable.
#[derive(Clone, Debug)]
pub struct L1Norm<T: Real> {
    pub lambda: T,
    reference: Option<DVector<T>>,
}

impl<T: Real> L1Norm<T> {
    pub fn new(lambda: T) -> Self {
        Self { lambda, reference: None }
    }

    pub fn relative_to(mut self, reference: DVector<T>) -> Self {
        self.reference = Some(reference);
        self
    }
}

impl<T: Real> Regularizer<T> for L1Norm<T> {
    fn value(&self, x: &DVector<T>) -> T {
        match &self.reference {
            Some(r) => self.lambda * x.iter().zip(r.iter()).fold(T::zero(), |s, (a, b)| s + (a.abs() - b.abs())),
            None => self.lambda * x.iter().fold(T::zero(), |s, a| s + a.abs()),
        }
    }

    fn prox(&self, tau: T, z: &DVector<T>) -> DVector<T> {
        let k = tau * self.lambda;
        z.map(|v| soft_threshold(v, k))
    }

    fn value_difference(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        self.lambda * x.iter().zip(y.iter()).fold(T::zero(), |s, (a, b)| s + (a.abs() - b.abs()))
    }
}

/// B ≡ 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroOperator;

impl<T: Real> MonotoneOperator<T> for ZeroOperator {
    fn resolvent(&self, _tau: T, z: &DVector<T>) -> DVector<T> {
        z.clone()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Normal cone of the box [lower, upper]ⁿ; its resolvent is the projection for every τ.
#[derive(Clone, Copy, Debug)]
pub struct BoxNormalCone<T: Real> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> MonotoneOperator<T> for BoxNormalCone<T> {
    fn resolvent(&self, _tau: T, z: &DVector<T>) -> DVector<T> {
        z.map(|v| v.max(self.lower).min(self.upper))
    }
}

type ScalarFn<T> = Box<dyn Fn(&DVector<T>) -> T + Send + Sync>;
type VectorFn<T> = Box<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;
type MatrixFn<T> = Box<dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync>;

/// Closure-backed [`SmoothObjective`].
pub struct FnObjective<T: Real> {
    value: ScalarFn<T>,
    gradient: VectorFn<T>,
    hessian: Option<MatrixFn<T>>,
}

impl<T: Real> FnObjective<T> {
    pub fn new(
        value: impl Fn(&DVector<T>) -> T + Send + Sync + 'static,
        gradient: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: None,
        }
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }
}

impl<T: Real> SmoothObjective<T> for FnObjective<T> {
    fn value(&self, x: &DVector<T>) -> T {
        (self.value)(x)
    }
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &DVector<T>) -> Option<DMatrix<T>> {
        self.hessian.as_ref().map(|h| h(x))
    }
}

/// Closure-backed [`SmoothMap`].
pub struct FnMap<T: Real> {
    eval: VectorFn<T>,
    jacobian: MatrixFn<T>,
}

impl<T: Real> FnMap<T> {
    pub fn new(
        eval: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
        jacobian: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Box::new(eval),
            jacobian: Box::new(jacobian),
        }
    }
}

impl<T: Real> SmoothMap<T> for FnMap<T> {
    fn eval(&self, x: &DVector<T>) -> DVector<T> {
        (self.eval)(x)
    }
    fn jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jacobian)(x)
    }
}

/// min F(x) = f(x) + Ψ(x).
#[derive(Clone)]
pub struct RegularizedProblem<T: Real> {
    pub objective: Arc<dyn SmoothObjective<T>>,
    pub regularizer: Arc<dyn Regularizer<T>>,
    /// Lipschitz constant L of ∇f.
    pub lipschitz: T,
}

impl<T: Real> RegularizedProblem<T> {
    pub fn new(objective: impl SmoothObjective<T> + 'static, regularizer: impl Regularizer<T> + 'static, lipschitz: T) -> Self {
        Self {
            objective: Arc::new(objective),
            regularizer: Arc::new(regularizer),
            lipschitz,
        }
    }

    /// F(x) = f(x) + Ψ(x).
    pub fn value(&self, x: &DVector<T>) -> T {
        self.objective.value(x) + self.regularizer.value(x)
    }
}

/// Find x with 0 ∈ A(x) + B(x).
#[derive(Clone)]
pub struct GeneralizedEquation<T: Real> {
    pub map: Arc<dyn SmoothMap<T>>,
    pub operator: Arc<dyn MonotoneOperator<T>>,
    /// Local Lipschitz bound of A.
    pub lipschitz: T,
}

impl<T: Real> GeneralizedEquation<T> {
    pub fn new(map: impl SmoothMap<T> + 'static, operator: impl MonotoneOperator<T> + 'static, lipschitz: T) -> Self {
        Self {
            map: Arc::new(map),
            operator: Arc::new(operator),
            lipschitz,
        }
    }
}

/// Common view of both problem forms: A, ∇A and the resolvent of B.
///
/// For a regularized problem A = ∇f and B = ∂Ψ, so the resolvent is prox_{τΨ}
/// and the Jacobian is the symmetrized Hessian.
pub trait Splitting<T: Real> {
    fn forward(&self, x: &DVector<T>) -> DVector<T>;
    fn resolvent(&self, tau: T, z: &DVector<T>) -> DVector<T>;
    fn jacobian(&self, x: &DVector<T>) -> Option<DMatrix<T>>;
    fn resolvent_is_identity(&self) -> bool;
}

impl<T: Real> Splitting<T> for RegularizedProblem<T> {
    fn forward(&self, x: &DVector<T>) -> DVector<T> {
        self.objective.gradient(x)
    }
    fn resolvent(&self, tau: T, z: &DVector<T>) -> DVector<T> {
        self.regularizer.prox(tau, z)
    }
    fn jacobian(&self, x: &DVector<T>) -> Option<DMatrix<T>> {
        self.objective.hessian(x).map(|h| {
            let ht = h.transpose();
            (h + ht) * T::lit(0.5)
        })
    }
    fn resolvent_is_identity(&self) -> bool {
        self.regularizer.is_zero()
    }
}

impl<T: Real> Splitting<T> for GeneralizedEquation<T> {
    fn forward(&self, x: &DVector<T>) -> DVector<T> {
        self.map.eval(x)
    }
    fn resolvent(&self, tau: T, z: &DVector<T>) -> DVector<T> {
        self.operator.resolvent(tau, z)
    }
    fn jacobian(&self, x: &DVector<T>) -> Option<DMatrix<T>> {
        Some(self.map.jacobian(x))
    }
    fn resolvent_is_identity(&self) -> bool {
        self.operator.is_zero()
    }
}

/// Distance-to-solution-set oracle.
pub type DistanceOracle<T> = Arc<dyn Fn(&DVector<T>) -> T + Send + Sync>;

/// Ground-truth facts known about a problem instance.
#[derive(Clone)]
pub struct ProblemMetadata<T: Real> {
    /// Hölder exponent p of ∇A near the solution set.
    pub holder_p: Option<T>,
    pub holder_zeta: Option<T>,
    /// Error-bound exponent q.
    pub eb_q: Option<T>,
    pub eb_kappa: Option<T>,
    pub dist_oracle: Option<DistanceOracle<T>>,
    pub f_star: Option<T>,
    pub reference_solution: Option<DVector<T>>,
    /// A pair (u, v) with ⟨A(u) − A(v), u − v⟩ < 0, when A is known to be nonmonotone.
    pub monotonicity_witness: Option<(DVector<T>, DVector<T>)>,
}

impl<T: Real> Default for ProblemMetadata<T> {
    fn default() -> Self {
        Self {
            holder_p: None,
            holder_zeta: None,
            eb_q: None,
            eb_kappa: None,
            dist_oracle: None,
            f_star: None,
            reference_solution: None,
            monotonicity_witness: None,
        }
    }
}

impl<T: Real> fmt::Debug for ProblemMetadata<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemMetadata")
            .field("holder_p", &self.holder_p)
            .field("holder_zeta", &self.holder_zeta)
            .field("eb_q", &self.eb_q)
            .field("eb_kappa", &self.eb_kappa)
            .field("dist_oracle", &self.dist_oracle.is_some())
            .field("f_star", &self.f_star)
            .finish()
    }
}

#[derive(Clone)]
pub enum ProblemKind<T: Real> {
    Regularized(RegularizedProblem<T>),
    Equation(GeneralizedEquation<T>),
}

/// Whether the objective-based conditions apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemMode {
    Optimization,
    Equation,
}

/// A named problem with its metadata and a default starting point.
#[derive(Clone)]
pub struct ProblemInstance<T: Real> {
    pub name: String,
    pub dim: usize,
    pub kind: ProblemKind<T>,
    pub metadata: ProblemMetadata<T>,
    pub start: DVector<T>,
}

impl<T: Real> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("mode", &self.mode())
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl<T: Real> ProblemInstance<T> {
    pub fn regularized(name: impl Into<String>, problem: RegularizedProblem<T>, start: DVector<T>) -> Self {
        Self {
            name: name.into(),
            dim: start.len(),
            kind: ProblemKind::Regularized(problem),
            metadata: ProblemMetadata::default(),
            start,
        }
    }

    pub fn equation(name: impl Into<String>, problem: GeneralizedEquation<T>, start: DVector<T>) -> Self {
        Self {
            name: name.into(),
            dim: start.len(),
            kind: ProblemKind::Equation(problem),
            metadata: ProblemMetadata::default(),
            start,
        }
    }

    pub fn with_metadata(mut self, metadata: ProblemMetadata<T>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn mode(&self) -> ProblemMode {
        match self.kind {
            ProblemKind::Regularized(_) => ProblemMode::Optimization,
            ProblemKind::Equation(_) => ProblemMode::Equation,
        }
    }

    pub fn as_regularized(&self) -> Option<&RegularizedProblem<T>> {
        match &self.kind {
            ProblemKind::Regularized(p) => Some(p),
            ProblemKind::Equation(_) => None,
        }
    }

    pub fn require_regularized(&self, what: &str) -> Result<&RegularizedProblem<T>> {
        self.as_regularized()
            .ok_or_else(|| Error::NoObjective(format!("{what} is not available for generalized equation `{}`", self.name)))
    }

    /// F(x) in optimization mode.
    pub fn objective(&self, x: &DVector<T>) -> Option<T> {
        self.as_regularized().map(|p| p.value(x))
    }

    pub fn lipschitz(&self) -> T {
        match &self.kind {
            ProblemKind::Regularized(p) => p.lipschitz,
            ProblemKind::Equation(g) => g.lipschitz,
        }
    }

    pub fn distance(&self, x: &DVector<T>) -> Option<T> {
        self.metadata.dist_oracle.as_ref().map(|d| d(x))
    }

    pub fn check_dimension(&self, x: &DVector<T>) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            })
        }
    }
}

impl<T: Real> Splitting<T> for ProblemInstance<T> {
    fn forward(&self, x: &DVector<T>) -> DVector<T> {
        match &self.kind {
            ProblemKind::Regularized(p) => p.forward(x),
            ProblemKind::Equation(g) => g.forward(x),
        }
    }
    fn resolvent(&self, tau: T, z: &DVector<T>) -> DVector<T> {
        match &self.kind {
            ProblemKind::Regularized(p) => p.resolvent(tau, z),
            ProblemKind::Equation(g) => g.resolvent(tau, z),
        }
    }
    fn jacobian(&self, x: &DVector<T>) -> Option<DMatrix<T>> {
        match &self.kind {
            ProblemKind::Regularized(p) => p.jacobian(x),
            ProblemKind::Equation(g) => g.jacobian(x),
        }
    }
    fn resolvent_is_identity(&self) -> bool {
        match &self.kind {
            ProblemKind::Regularized(p) => p.resolvent_is_identity(),
            ProblemKind::Equation(g) => g.resolvent_is_identity(),
        }
    }
}
