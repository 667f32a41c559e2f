use std::fmt;
use std::sync::Arc;

use super::{Coefficient, HamiltonianError, HamiltonianParams, Result};
use crate::scalar::{linear_fit, log_space, Real};

/// Scalar map `f(m)` of a lower-order term.
#[derive(Clone)]
pub enum DensityMap<S> {
    /// `coeff · m^exponent`
    Power { coeff: S, exponent: S },
    /// `−coeff · ln m`
    NegLog { coeff: S },
    /// Positive (`f⁺`) or negative (`f⁻`, returned as `min(f, 0)`) part.
    Part { inner: Box<DensityMap<S>>, positive: bool },
    Custom(Arc<dyn Fn(S) -> S + Send + Sync>),
}

impl<S: Real> DensityMap<S> {
    pub fn eval(&self, m: S) -> S {
        match self {
            DensityMap::Power { coeff, exponent } => *coeff * m.powf(*exponent),
            DensityMap::NegLog { coeff } => -*coeff * m.ln(),
            DensityMap::Part { inner, positive } => {
                let v = inner.eval(m);
                if *positive {
                    v.max(S::zero())
                } else {
                    v.min(S::zero())
                }
            }
            DensityMap::Custom(f) => f(m),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for DensityMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityMap::Power { coeff, exponent } => write!(f, "{coeff:?}*m^{exponent:?}"),
            DensityMap::NegLog { coeff } => write!(f, "-{coeff:?}*ln(m)"),
            DensityMap::Part { inner, positive } => {
                write!(f, "({inner:?}){}", if *positive { "+" } else { "-" })
            }
            DensityMap::Custom(_) => write!(f, "custom"),
        }
    }
}

/// `c(x) f(m) |p|^θ`.
#[derive(Debug, Clone)]
pub struct LowerOrderTerm<S> {
    pub label: String,
    pub c: Coefficient<S>,
    pub f: DensityMap<S>,
    pub theta: S,
}

impl<S: Real> LowerOrderTerm<S> {
    pub fn new(label: impl Into<String>, c: Coefficient<S>, f: DensityMap<S>, theta: S) -> Self {
        Self {
            label: label.into(),
            c,
            f,
            theta,
        }
    }

    pub fn eval(&self, x: &[S; 2], p_norm: S, m: S) -> S {
        let pp = if self.theta == S::zero() {
            S::one()
        } else {
            p_norm.powf(self.theta)
        };
        self.c.eval(x) * self.f.eval(m) * pp
    }

    /// `k` with `D_p(term) = k·p`.
    pub(super) fn radial_derivative_factor(&self, x: &[S; 2], p_norm: S, m: S) -> S {
        if self.theta == S::zero() || p_norm == S::zero() {
            return S::zero();
        }
        self.c.eval(x) * self.f.eval(m) * self.theta * p_norm.powf(self.theta - S::lit(2.0))
    }
}

/// Which of the two admissibility conditions a term satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerOrderCondition {
    /// `θ ∈ {0} ∪ (1, α)`, `|f| = o(m^{β−δθ})` at infinity, `|f| = O(1)` at zero.
    Strong,
    /// `c, f ≥ 0`, `θ ∈ {0} ∪ (1, α]` with the signed growth bounds.
    Signed,
}

const M_LO: f64 = 1e-4;
const M_HI: f64 = 1e4;
const SAMPLES: usize = 33;

/// Log-log slope of `|f|` over the samples satisfying `keep`, plus the
/// first and last values of `|f|/m^e` in that window. `None` when `f`
/// vanishes on the window.
fn window_fit<S: Real>(ms: &[S], fs: &[S], e: S, keep: impl Fn(S) -> bool) -> Option<(S, S, S)> {
    let (mut lx, mut ly, mut ratios) = (Vec::new(), Vec::new(), Vec::new());
    for (&m, &f) in ms.iter().zip(fs) {
        if keep(m) && f != S::zero() {
            lx.push(m.ln());
            ly.push(f.abs().ln());
            ratios.push(f.abs() / m.powf(e));
        }
    }
    let (slope, _, _) = linear_fit(&lx, &ly)?;
    Some((slope, ratios[0], *ratios.last()?))
}

/// Checks growth conditions on `f` at sampled `m ∈ [1e-4, 1e4]` by log-log
/// slope fits over the top and bottom two decades, with slope tolerance
/// `tol`. `c(x)` is sampled at `x_samples`.
pub fn validate_lower_order_term<S: Real>(
    params: &HamiltonianParams<S>,
    term: &LowerOrderTerm<S>,
    x_samples: &[[S; 2]],
    tol: S,
) -> Result<LowerOrderCondition> {
    let reject = |reason: String| HamiltonianError::InvalidLowerOrderTerm {
        label: term.label.clone(),
        reason,
    };
    let theta = term.theta;
    let alpha = params.alpha();
    let theta_zero = theta == S::zero();
    if !(theta_zero || (theta > S::one() && theta <= alpha)) {
        return Err(reject(format!("theta = {theta} is neither 0 nor in (1, alpha]")));
    }
    let ms = log_space(S::lit(M_LO), S::lit(M_HI), SAMPLES);
    let fs: Vec<S> = ms.iter().map(|&m| term.f.eval(m)).collect();
    if fs.iter().any(|f| !f.is_finite()) {
        return Err(reject("f is not finite on the sample range".into()));
    }
    let top = |m: S| m >= S::lit(M_HI * 1e-2);
    let bottom = |m: S| m <= S::lit(M_LO * 1e2);
    // O(m^e) at infinity / zero, o(m^e) at infinity
    let big_o_inf = |e: S| window_fit(&ms, &fs, e, top).is_none_or(|(s, _, _)| s <= e + tol);
    let little_o_inf = |e: S| {
        window_fit(&ms, &fs, e, top).is_none_or(|(s, first, last)| s <= e + tol && last < first)
    };
    let big_o_zero = |e: S| window_fit(&ms, &fs, e, bottom).is_none_or(|(s, _, _)| s >= e - tol);

    let e_inf = params.beta() - params.delta() * theta;
    let mut reasons = Vec::new();
    if theta_zero || theta < alpha {
        if !little_o_inf(e_inf) {
            reasons.push(format!("|f| is not o(m^{e_inf}) as m -> inf"));
        } else if !big_o_zero(S::zero()) {
            reasons.push("|f| is not O(1) as m -> 0".to_string());
        } else {
            return Ok(LowerOrderCondition::Strong);
        }
    } else {
        reasons.push("theta = alpha needs the signed condition".into());
    }
    let c_nonneg = x_samples.iter().all(|x| term.c.eval(x) >= S::zero());
    let f_nonneg = fs.iter().all(|&f| f >= S::zero());
    if !c_nonneg || !f_nonneg {
        reasons.push("signed condition needs c >= 0 and f >= 0".into());
    } else if theta_zero {
        if little_o_inf(params.beta()) {
            return Ok(LowerOrderCondition::Signed);
        }
        reasons.push(format!("f is not o(m^{}) as m -> inf", params.beta()));
    } else if !big_o_inf(e_inf) {
        reasons.push(format!("f is not O(m^{e_inf}) as m -> inf"));
    } else if !big_o_zero(-S::one()) {
        reasons.push("f is not O(1/m) as m -> 0".into());
    } else {
        return Ok(LowerOrderCondition::Signed);
    }
    Err(reject(reasons.join("; ")))
}
