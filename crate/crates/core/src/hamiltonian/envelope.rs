use super::{HamiltonianError, HamiltonianParams, Result};
use crate::scalar::Real;

/// `C⁻¹|p|^α/(m^τ+1) − C m^β − C`; finite down to `m = 0`.
pub fn envelope_lower<S: Real>(params: &HamiltonianParams<S>, p_norm: S, m: S, c: S) -> S {
    let m = m.max(S::zero());
    let mt = if params.tau() == S::zero() {
        S::one()
    } else {
        m.powf(params.tau())
    };
    p_norm.powf(params.alpha()) / (c * (mt + S::one())) - c * m.powf(params.beta()) - c
}

/// `C|p|^α/m^τ − C⁻¹ m^β`, valid for `m ≥ C`.
pub fn envelope_upper<S: Real>(params: &HamiltonianParams<S>, p_norm: S, m: S, c: S) -> Result<S> {
    if !(m >= c) {
        return Err(HamiltonianError::EnvelopeNotApplicable {
            m: m.as_f64(),
            c: c.as_f64(),
        });
    }
    Ok(c * p_norm.powf(params.alpha()) / m.powf(params.tau()) - m.powf(params.beta()) / c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, t: f64, b: f64) -> HamiltonianParams<f64> {
        HamiltonianParams::derive(a, t, b, 0.1).unwrap()
    }

    #[test]
    fn lower_values() {
        assert_eq!(envelope_lower(&p(2.0, 0.0, 1.0), 0.0, 0.0, 3.0), -3.0);
        assert_eq!(envelope_lower(&p(2.0, 0.0, 1.0), 2.0, 1.0, 1.0), 0.0);
        let v = envelope_lower(&p(3.0, 0.5, 2.0), 1.0, 4.0, 2.0);
        assert!((v - (1.0 / 6.0 - 34.0)).abs() < 1e-12);
    }

    #[test]
    fn upper_values() {
        // C|p|^α/m^τ − m^β/C = 1 − 2
        assert_eq!(envelope_upper(&p(2.0, 0.0, 1.0), 1.0, 2.0, 1.0).unwrap(), -1.0);
        assert_eq!(envelope_upper(&p(2.0, 0.5, 2.0), 0.0, 4.0, 2.0).unwrap(), -8.0);
        assert!(matches!(
            envelope_upper(&p(2.0, 0.5, 2.0), 0.0, 1.0, 2.0),
            Err(HamiltonianError::EnvelopeNotApplicable { .. })
        ));
    }
}
