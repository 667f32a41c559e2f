use super::{HamiltonianError, HamiltonianModel, Result};
use crate::scalar::{norm, Real};

/// Search region `|p| ≤ max_radius` for the Legendre maximiser, resolved
/// to `rel_tol · max_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBracket<S> {
    pub max_radius: S,
    pub rel_tol: S,
}

impl<S: Real> RadialBracket<S> {
    pub fn new(max_radius: S) -> Self {
        Self {
            max_radius,
            rel_tol: S::lit(1e-9),
        }
    }
}

/// One evaluated value `L(x, v, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianSample<S> {
    pub v: [S; 2],
    pub m: S,
    pub value: S,
}

/// Maximises a concave-ish function on `[0, hi]` by golden sections.
/// Returns the maximiser and maximum.
fn golden_max<S: Real>(f: impl Fn(S) -> S, hi: S, tol: S) -> (S, S) {
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let (mut a, mut b) = (S::zero(), hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // the interval ends are candidates too: the maximum may sit at s = 0
    let mut best = ((a + b) / S::lit(2.0), f((a + b) / S::lit(2.0)));
    for s in [a, b] {
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    best
}

impl<S: Real> HamiltonianModel<S> {
    /// `L(x, v, m) = sup_p (−v·p − H(x, p, m))` over `|p| ≤ max_radius`.
    ///
    /// Radial models are maximised along `p = −s v/|v|`; custom models use
    /// a multi-start compass search and are approximate.
    pub fn legendre_lagrangian(
        &self,
        x: &[S; 2],
        v: &[S; 2],
        m: S,
        bracket: RadialBracket<S>,
    ) -> Result<S> {
        self.eval_h(x, &[S::zero(); 2], m)?;
        let radius = bracket.max_radius;
        let tol = bracket.rel_tol * radius;
        let (arg, value) = if self.is_radial() {
            let vn = norm(v);
            let dir = if vn > S::zero() {
                [v[0] / vn, v[1] / vn]
            } else {
                [S::one(), S::zero()]
            };
            let obj = |s: S| {
                let p = [-s * dir[0], -s * dir[1]];
                // eval_h cannot fail here: m was checked above
                s * vn - self.eval_h(x, &p, m).unwrap_or(S::infinity())
            };
            golden_max(obj, radius, tol)
        } else {
            self.compass_max(x, v, m, radius, tol)
        };
        if arg >= radius - S::lit(4.0) * tol {
            return Err(HamiltonianError::BracketTooSmall {
                radius: radius.as_f64(),
            });
        }
        Ok(value)
    }

    /// [`Self::legendre_lagrangian`] with the bracket doubled from
    /// `|p| ≤ 1` until the maximiser is interior.
    pub fn legendre_lagrangian_auto(&self, x: &[S; 2], v: &[S; 2], m: S) -> Result<S> {
        let mut radius = S::one().max(S::lit(2.0) * norm(v));
        let mut last = None;
        for _ in 0..200 {
            match self.legendre_lagrangian(x, v, m, RadialBracket::new(radius)) {
                Err(e @ HamiltonianError::BracketTooSmall { .. }) => {
                    last = Some(e);
                    radius = radius * S::lit(2.0);
                }
                other => return other,
            }
        }
        Err(last.expect("loop ran at least once"))
    }

    pub fn lagrangian_sample(&self, x: &[S; 2], v: &[S; 2], m: S) -> Result<LagrangianSample<S>> {
        Ok(LagrangianSample {
            v: *v,
            m,
            value: self.legendre_lagrangian_auto(x, v, m)?,
        })
    }

    fn compass_max(&self, x: &[S; 2], v: &[S; 2], m: S, radius: S, tol: S) -> (S, S) {
        let dim = self.momentum_dim();
        let obj = |p: &[S; 2]| {
            -(v[0] * p[0] + v[1] * p[1]) - self.eval_h(x, p, m).unwrap_or(S::infinity())
        };
        let clamp = |p: [S; 2]| {
            let n = norm(&p);
            if n > radius {
                [p[0] * radius / n, p[1] * radius / n]
            } else {
                p
            }
        };
        let vn = norm(v).max(S::min_positive_value());
        let mut starts = vec![[S::zero(); 2]];
        for frac in [0.01, 0.1, 0.5] {
            let s = S::lit(frac) * radius;
            starts.push(clamp([-s * v[0] / vn, -s * v[1] / vn]));
            for a in 0..dim {
                let mut e = [S::zero(); 2];
                e[a] = s;
                starts.push(e);
                e[a] = -s;
                starts.push(e);
            }
        }
        let mut best = ([S::zero(); 2], S::neg_infinity());
        for start in starts {
            let mut p = start;
            let mut val = obj(&p);
            let mut step = radius / S::lit(4.0);
            while step > tol {
                let mut moved = false;
                for a in 0..dim {
                    for sign in [S::one(), -S::one()] {
                        let mut q = p;
                        q[a] = q[a] + sign * step;
                        let q = clamp(q);
                        let qv = obj(&q);
                        if qv > val {
                            p = q;
                            val = qv;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step = step / S::lit(2.0);
                }
            }
            if val > best.1 {
                best = (p, val);
            }
        }
        (norm(&best.0), best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{CustomDpH, CustomH, HamiltonianParams};
    use super::*;
    use std::sync::Arc;

    fn standard(a: f64, t: f64, b: f64) -> HamiltonianModel<f64> {
        HamiltonianModel::standard(HamiltonianParams::derive(a, t, b, 0.1).unwrap())
    }

    const X: [f64; 2] = [0.0, 0.0];

    #[test]
    fn quadratic_values() {
        let l = standard(2.0, 0.0, 1.0)
            .legendre_lagrangian(&X, &[2.0, 0.0], 1.0, RadialBracket::new(10.0))
            .unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        let l = standard(2.0, 0.0, 2.0)
            .legendre_lagrangian(&X, &[0.0, 0.0], 1.0, RadialBracket::new(10.0))
            .unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn congestion_value_matches_dense_search() {
        // dense grid search over p along the axis
        let model = standard(2.0, 0.5, 2.0);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=400_000 {
            let p = -4.0 + 8.0 * i as f64 / 400_000.0;
            best = best.max(-p - model.eval_h(&X, &[p, 0.0], 1.0).unwrap());
        }
        assert!((best - 1.25).abs() < 1e-9);
        let l = model.legendre_lagrangian_auto(&X, &[1.0, 0.0], 1.0).unwrap();
        assert!((l - best).abs() < 1e-9);
    }

    #[test]
    fn small_bracket_is_reported() {
        let r = standard(2.0, 0.0, 1.0).legendre_lagrangian(&X, &[10.0, 0.0], 1.0, RadialBracket::new(1.0));
        assert!(matches!(r, Err(HamiltonianError::BracketTooSmall { .. })));
    }

    #[test]
    fn custom_anisotropic_search() {
        // H = p1² + 2 p2² − m: L(v) = v1²/4 + v2²/8 + m
        let params = HamiltonianParams::derive(2.0, 0.0, 1.0, 0.1).unwrap();
        let h: CustomH<f64> = Arc::new(|_, p, m| p[0] * p[0] + 2.0 * p[1] * p[1] - m);
        let g: CustomDpH<f64> = Arc::new(|_, p, _| [2.0 * p[0], 4.0 * p[1]]);
        let model = HamiltonianModel::custom(params, 2, h, g).unwrap();
        let l = model.legendre_lagrangian_auto(&X, &[1.0, 2.0], 0.5).unwrap();
        assert!((l - (0.25 + 0.5 + 0.5)).abs() < 1e-6);
    }
}
