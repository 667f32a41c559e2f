use super::{HamiltonianError, Result};
use crate::scalar::Real;

/// Growth exponents of a Hamiltonian together with the derived exponents
/// `δ = (β+τ)/α`, `γ = (β+1)/δ` and `γ′ = γ/(γ−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams<S> {
    alpha: S,
    tau: S,
    beta: S,
    epsilon: S,
    delta: S,
    gamma: S,
    gamma_conj: S,
}

fn violation(msg: String) -> HamiltonianError {
    HamiltonianError::ParamConstraintViolation(msg)
}

impl<S: Real> HamiltonianParams<S> {
    /// Validates `α > 1`, `0 ≤ τ < 1`, `β > τ/(α−1)`, `ε > 0` and `β − δ > ε`,
    /// then fills in the derived exponents.
    pub fn derive(alpha: S, tau: S, beta: S, epsilon: S) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("tau", tau), ("beta", beta), ("epsilon", epsilon)] {
            if !v.is_finite() {
                return Err(violation(format!("{name} must be finite")));
            }
        }
        if !(alpha > S::one()) {
            return Err(violation(format!("alpha > 1 (alpha = {alpha})")));
        }
        if !(tau >= S::zero() && tau < S::one()) {
            return Err(violation(format!("0 <= tau < 1 (tau = {tau})")));
        }
        let bound = tau / (alpha - S::one());
        if !(beta > bound) {
            return Err(violation(format!(
                "beta > tau/(alpha-1) (beta = {beta}, tau/(alpha-1) = {bound})"
            )));
        }
        if !(epsilon > S::zero()) {
            return Err(violation(format!("epsilon > 0 (epsilon = {epsilon})")));
        }
        let delta = (beta + tau) / alpha;
        if !(beta - delta > epsilon) {
            return Err(violation(format!(
                "beta - delta > epsilon (beta - delta = {}, epsilon = {epsilon})",
                beta - delta
            )));
        }
        let gamma = (beta + S::one()) / delta;
        Ok(Self {
            alpha,
            tau,
            beta,
            epsilon,
            delta,
            gamma,
            gamma_conj: gamma / (gamma - S::one()),
        })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }
    pub fn tau(&self) -> S {
        self.tau
    }
    pub fn beta(&self) -> S {
        self.beta
    }
    pub fn epsilon(&self) -> S {
        self.epsilon
    }
    pub fn delta(&self) -> S {
        self.delta
    }
    pub fn gamma(&self) -> S {
        self.gamma
    }
    pub fn gamma_conj(&self) -> S {
        self.gamma_conj
    }

    /// Conjugate of the momentum exponent, `α′ = α/(α−1)`.
    pub fn alpha_conj(&self) -> S {
        self.alpha / (self.alpha - S::one())
    }

    /// Relative defects of `γδ = β+1`, `δ(γ−α) = 1−τ` and
    /// `δ(γ−1) = β+1−δ`.
    pub fn identity_residuals(&self) -> [S; 3] {
        let rel = |lhs: S, rhs: S| (lhs - rhs).abs() / rhs.abs().max(S::min_positive_value());
        let (a, t, b, d, g) = (self.alpha, self.tau, self.beta, self.delta, self.gamma);
        [
            rel(g * d, b + S::one()),
            rel(d * (g - a), S::one() - t),
            rel(d * (g - S::one()), b + S::one() - d),
        ]
    }

    /// Power-law Lagrangian `m^{τ/(α−1)}|v|^{α′}/α′ + m^β`.
    ///
    /// Its velocity part differs from the exact conjugate of
    /// `|p|^α/m^τ − m^β` by the constant factor `α′(α−1)α^{−α′}`.
    pub fn power_lagrangian(&self, v_norm: S, m: S) -> S {
        let ac = self.alpha_conj();
        m.powf(self.tau / (self.alpha - S::one())) * v_norm.powf(ac) / ac + m.powf(self.beta)
    }

    /// Whether `τα′ ≤ 4`.
    pub fn lions_condition(&self) -> bool {
        self.tau * self.alpha_conj() <= S::lit(4.0)
    }
}
