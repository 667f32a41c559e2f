//! Hamiltonians `H(x, p, m)` of stationary mean-field games.
//!
//! Points and momenta are `[S; 2]`; one-dimensional problems leave the
//! second component at zero.

mod envelope;
mod legendre;
mod lower_order;
mod params;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{norm, Real};

pub use envelope::{envelope_lower, envelope_upper};
pub use legendre::{LagrangianSample, RadialBracket};
pub use lower_order::{validate_lower_order_term, DensityMap, LowerOrderCondition, LowerOrderTerm};
pub use params::HamiltonianParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("parameter constraint violated: {0}")]
    ParamConstraintViolation(String),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("supplied gradient disagrees with finite differences at p = {p:?}, m = {m}: relative error {rel_error:e}")]
    GradientMismatch { p: [f64; 2], m: f64, rel_error: f64 },
    #[error("Legendre maximiser reached the bracket edge |p| = {radius}")]
    BracketTooSmall { radius: f64 },
    #[error("upper envelope needs m >= C (m = {m}, C = {c})")]
    EnvelopeNotApplicable { m: f64, c: f64 },
    #[error("lower-order term {label:?} rejected: {reason}")]
    InvalidLowerOrderTerm { label: String, reason: String },
    #[error("coefficient must have a positive infimum: {0}")]
    InvalidCoefficient(String),
    #[error("model evaluation produced a non-finite value at p = {p:?}, m = {m}")]
    EvaluationFailure { p: [f64; 2], m: f64 },
}

pub type Result<T> = std::result::Result<T, HamiltonianError>;

pub type PointFn<S> = Arc<dyn Fn(&[S; 2]) -> S + Send + Sync>;
pub type CustomH<S> = Arc<dyn Fn(&[S; 2], &[S; 2], S) -> S + Send + Sync>;
pub type CustomDpH<S> = Arc<dyn Fn(&[S; 2], &[S; 2], S) -> [S; 2] + Send + Sync>;

/// Spatial coefficient `a(x)`, `b(x)` or `c(x)`.
#[derive(Clone)]
pub enum Coefficient<S> {
    Constant(S),
    Function(PointFn<S>),
}

impl<S: Real> Coefficient<S> {
    pub fn eval(&self, x: &[S; 2]) -> S {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(x),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Coefficient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c:?})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `a(x)|p|^α/m^τ − b(x)m^β`
    Standard,
    /// `a(x)(2/γ)|p|^{γ/2} − b(x)m`, the γ-Laplace MFG.
    SeparableGamma,
    /// User supplied `H` and `D_pH`.
    Custom,
}

#[derive(Clone)]
struct CustomParts<S> {
    h: CustomH<S>,
    dph: CustomDpH<S>,
    dim: usize,
}

/// Evaluable Hamiltonian with declared growth exponents.
#[derive(Clone)]
pub struct HamiltonianModel<S> {
    params: HamiltonianParams<S>,
    kind: ModelKind,
    a: Coefficient<S>,
    b: Coefficient<S>,
    momentum_scale: S,
    lower_order: Vec<LowerOrderTerm<S>>,
    custom: Option<CustomParts<S>>,
}

impl<S: Real> fmt::Debug for HamiltonianModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianModel")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("lower_order", &self.lower_order)
            .finish()
    }
}

impl<S: Real> HamiltonianModel<S> {
    pub fn standard(params: HamiltonianParams<S>) -> Self {
        Self {
            params,
            kind: ModelKind::Standard,
            a: Coefficient::Constant(S::one()),
            b: Coefficient::Constant(S::one()),
            momentum_scale: S::one(),
            lower_order: Vec::new(),
            custom: None,
        }
    }

    /// `(2/γ)|p|^{γ/2} − m`, declared with `(α, τ, β) = (γ/2, 0, 1)` and
    /// `ε = (β−δ)/2`.
    pub fn separable_gamma(gamma: S) -> Result<Self> {
        let two = S::lit(2.0);
        let alpha = gamma / two;
        if !(alpha > S::one()) {
            return Err(HamiltonianError::ParamConstraintViolation(format!(
                "alpha > 1 (alpha = gamma/2 = {alpha})"
            )));
        }
        let delta = S::one() / alpha;
        let params = HamiltonianParams::derive(alpha, S::zero(), S::one(), (S::one() - delta) / two)?;
        Ok(Self {
            kind: ModelKind::SeparableGamma,
            momentum_scale: two / gamma,
            ..Self::standard(params)
        })
    }

    /// Model from user-supplied `H` and `D_pH`. The gradient is checked
    /// against central differences of `H` on a fixed sample set; relative
    /// error above `1e-5` at `|p| ≥ 0.1` is a [`HamiltonianError::GradientMismatch`].
    pub fn custom(
        params: HamiltonianParams<S>,
        dim: usize,
        h: CustomH<S>,
        dph: CustomDpH<S>,
    ) -> Result<Self> {
        let model = Self {
            kind: ModelKind::Custom,
            custom: Some(CustomParts { h, dph, dim: dim.clamp(1, 2) }),
            ..Self::standard(params)
        };
        model.validate_custom_gradient()?;
        Ok(model)
    }

    /// Replaces `a(x)` and `b(x)`. Constants must be positive; functions
    /// are checked on the assumption lattice.
    pub fn with_coefficients(mut self, a: Coefficient<S>, b: Coefficient<S>) -> Result<Self> {
        for (name, c) in [("a", &a), ("b", &b)] {
            if let Coefficient::Constant(v) = c {
                if !(*v > S::zero() && v.is_finite()) {
                    return Err(HamiltonianError::InvalidCoefficient(format!("{name} = {v}")));
                }
            }
        }
        self.a = a;
        self.b = b;
        Ok(self)
    }

    /// Adds `c(x) f(m) |p|^θ` after checking the growth conditions on `f`.
    pub fn with_lower_order_term(mut self, term: LowerOrderTerm<S>) -> Result<Self> {
        validate_lower_order_term(&self.params, &term, &[[S::zero(); 2]], S::lit(0.05))?;
        self.lower_order.push(term);
        Ok(self)
    }

    pub fn params(&self) -> &HamiltonianParams<S> {
        &self.params
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn coefficients(&self) -> (&Coefficient<S>, &Coefficient<S>) {
        (&self.a, &self.b)
    }

    pub fn lower_order_terms(&self) -> &[LowerOrderTerm<S>] {
        &self.lower_order
    }

    /// Built-in models depend on `p` only through `|p|`.
    pub fn is_radial(&self) -> bool {
        self.custom.is_none()
    }

    /// Number of momentum components the model uses.
    pub fn momentum_dim(&self) -> usize {
        self.custom.as_ref().map_or(2, |c| c.dim)
    }

    fn check_density(m: S) -> Result<()> {
        if m > S::zero() && m.is_finite() {
            Ok(())
        } else {
            Err(HamiltonianError::NonPositiveDensity(m.as_f64()))
        }
    }

    pub fn eval_h(&self, x: &[S; 2], p: &[S; 2], m: S) -> Result<S> {
        Self::check_density(m)?;
        let pn = norm(p);
        let mut h = match &self.custom {
            Some(c) => (c.h)(x, p, m),
            None => {
                let pr = &self.params;
                self.a.eval(x) * self.momentum_scale * pn.powf(pr.alpha()) / m.powf(pr.tau())
                    - self.b.eval(x) * m.powf(pr.beta())
            }
        };
        for t in &self.lower_order {
            h = h + t.eval(x, pn, m);
        }
        if h.is_finite() {
            Ok(h)
        } else {
            Err(self.failure(p, m))
        }
    }

    pub fn eval_dph(&self, x: &[S; 2], p: &[S; 2], m: S) -> Result<[S; 2]> {
        Self::check_density(m)?;
        let pn = norm(p);
        let mut g = match &self.custom {
            Some(c) => (c.dph)(x, p, m),
            None => {
                let pr = &self.params;
                if pn == S::zero() {
                    [S::zero(); 2]
                } else {
                    let k = self.a.eval(x) * self.momentum_scale * pr.alpha()
                        * pn.powf(pr.alpha() - S::lit(2.0))
                        / m.powf(pr.tau());
                    [k * p[0], k * p[1]]
                }
            }
        };
        for t in &self.lower_order {
            let k = t.radial_derivative_factor(x, pn, m);
            g = [g[0] + k * p[0], g[1] + k * p[1]];
        }
        if g[0].is_finite() && g[1].is_finite() {
            Ok(g)
        } else {
            Err(self.failure(p, m))
        }
    }

    fn failure(&self, p: &[S; 2], m: S) -> HamiltonianError {
        HamiltonianError::EvaluationFailure {
            p: [p[0].as_f64(), p[1].as_f64()],
            m: m.as_f64(),
        }
    }

    fn validate_custom_gradient(&self) -> Result<()> {
        let dim = self.momentum_dim();
        let x = [S::zero(); 2];
        let mags = [0.1, 0.7, 3.0, 20.0];
        let dirs: &[[f64; 2]] = if dim == 1 {
            &[[1.0, 0.0], [-1.0, 0.0]]
        } else {
            &[[1.0, 0.0], [0.6, 0.8], [-0.8, 0.6], [0.0, -1.0]]
        };
        for &m in &[0.05, 1.0, 7.0] {
            let m = S::lit(m);
            for &r in &mags {
                for d in dirs {
                    let p = [S::lit(r * d[0]), S::lit(r * d[1])];
                    let g = self.eval_dph(&x, &p, m)?;
                    let mut fd = [S::zero(); 2];
                    for a in 0..dim {
                        let step = S::lit(1e-5) * S::one().max(p[a].abs());
                        let (mut hi, mut lo) = (p, p);
                        hi[a] = hi[a] + step;
                        lo[a] = lo[a] - step;
                        fd[a] = (self.eval_h(&x, &hi, m)? - self.eval_h(&x, &lo, m)?)
                            / (S::lit(2.0) * step);
                    }
                    let diff = norm(&[g[0] - fd[0], g[1] - fd[1]]);
                    let scale = norm(&fd).max(norm(&g)).max(S::lit(1e-8));
                    let rel = diff / scale;
                    if !(rel <= S::lit(1e-5)) {
                        return Err(HamiltonianError::GradientMismatch {
                            p: [p[0].as_f64(), p[1].as_f64()],
                            m: m.as_f64(),
                            rel_error: rel.as_f64(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard(a: f64, t: f64, b: f64) -> HamiltonianModel<f64> {
        HamiltonianModel::standard(HamiltonianParams::derive(a, t, b, 0.1).unwrap())
    }

    const X: [f64; 2] = [0.0, 0.0];

    #[test]
    fn standard_values() {
        assert_eq!(standard(2.0, 0.0, 1.0).eval_h(&X, &[1.0, 0.0], 1.0).unwrap(), 0.0);
        let h = standard(2.0, 0.5, 2.0).eval_h(&X, &[2.0, 0.0], 4.0).unwrap();
        assert!((h + 14.0).abs() < 1e-12);
    }

    #[test]
    fn separable_gamma_value() {
        let m = HamiltonianModel::separable_gamma(4.0).unwrap();
        assert!(m.eval_h(&X, &[2.0, 0.0], 2.0).unwrap().abs() < 1e-14);
        let p = m.params();
        assert_eq!((p.alpha(), p.tau(), p.beta()), (2.0, 0.0, 1.0));
        assert_eq!(p.gamma(), 4.0);
        assert!(matches!(
            HamiltonianModel::<f64>::separable_gamma(2.0),
            Err(HamiltonianError::ParamConstraintViolation(_))
        ));
    }

    #[test]
    fn gradients() {
        let g = standard(2.0, 0.0, 1.0).eval_dph(&X, &[1.0, 2.0], 3.0).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-14 && (g[1] - 4.0).abs() < 1e-14);
        let g = standard(3.0, 0.5, 2.0).eval_dph(&X, &[1.0, 0.0], 4.0).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-14 && g[1] == 0.0);
        assert_eq!(standard(1.5, 0.2, 2.0).eval_dph(&X, &[0.0, 0.0], 2.0).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn density_must_be_positive() {
        let m = standard(2.0, 0.0, 1.0);
        assert!(matches!(m.eval_h(&X, &[1.0, 0.0], 0.0), Err(HamiltonianError::NonPositiveDensity(_))));
        assert!(matches!(m.eval_dph(&X, &[1.0, 0.0], -1.0), Err(HamiltonianError::NonPositiveDensity(_))));
    }

    #[test]
    fn custom_gradient_is_validated() {
        let params = HamiltonianParams::derive(2.0, 0.0, 1.0, 0.1).unwrap();
        let h: CustomH<f64> = Arc::new(|_, p, m| (p[0] * p[0] + p[1] * p[1]) - m);
        let good: CustomDpH<f64> = Arc::new(|_, p, _| [2.0 * p[0], 2.0 * p[1]]);
        let bad: CustomDpH<f64> = Arc::new(|_, p, _| [2.0 * p[0], 2.1 * p[1]]);
        assert!(HamiltonianModel::custom(params, 2, h.clone(), good).is_ok());
        assert!(matches!(
            HamiltonianModel::custom(params, 2, h, bad),
            Err(HamiltonianError::GradientMismatch { .. })
        ));
    }

    #[test]
    fn coefficients_scale_terms() {
        let m = standard(2.0, 0.0, 1.0)
            .with_coefficients(Coefficient::Constant(3.0), Coefficient::Function(Arc::new(|x| 1.0 + x[0])))
            .unwrap();
        let h = m.eval_h(&[1.0, 0.0], &[1.0, 0.0], 2.0).unwrap();
        assert!((h - (3.0 - 4.0)).abs() < 1e-14);
        assert!(standard(2.0, 0.0, 1.0)
            .with_coefficients(Coefficient::Constant(0.0), Coefficient::Constant(1.0))
            .is_err());
    }
}
