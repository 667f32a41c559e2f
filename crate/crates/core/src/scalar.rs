//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Volume of the unit ball in dimension 1 or 2.
pub fn unit_ball_volume<S: Real>(dim: usize) -> S {
    match dim {
        1 => S::lit(2.0),
        2 => S::PI(),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Euclidean norm of a short vector.
#[inline]
pub fn norm<S: Real>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &x| acc + x * x).sqrt()
}

#[inline]
pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Ordinary least-squares line fit `y ≈ slope·x + intercept`.
///
/// Returns `(slope, intercept, r²)`; `None` for fewer than two distinct abscissae.
pub fn linear_fit<S: Real>(xs: &[S], ys: &[S]) -> Option<(S, S, S)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = S::from_usize_lossy(n);
    let mx = xs.iter().copied().sum::<S>() / nf;
    let my = ys.iter().copied().sum::<S>() / nf;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    let mut syy = S::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx <= S::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= S::zero() {
        S::one()
    } else {
        (sxy * sxy / (sxx * syy)).min(S::one()).max(S::zero())
    };
    Some((slope, intercept, r2))
}

/// `n` points spaced evenly in log scale on `[lo, hi]`.
pub fn log_space<S: Real>(lo: S, hi: S, n: usize) -> Vec<S> {
    assert!(lo > S::zero() && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / S::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| (a + step * S::from_usize_lossy(i)).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, b, r2) = linear_fit(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-14);
        assert!((b + 1.0).abs() < 1e-14);
        assert!((r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_rejects_degenerate_abscissae() {
        assert!(linear_fit(&[1.0f64, 1.0], &[0.0, 2.0]).is_none());
        assert!(linear_fit(&[1.0f64], &[0.0]).is_none());
    }

    #[test]
    fn log_space_endpoints() {
        let v: Vec<f32> = log_space(1e-3, 1e3, 7);
        assert!((v[0] - 1e-3).abs() < 1e-8);
        assert!((v[6] - 1e3).abs() / 1e3 < 1e-5);
        assert!((v[3] - 1.0).abs() < 1e-5);
    }
}
