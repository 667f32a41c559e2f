use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Ball, GridError, GridSpec, Result, ScalarField};
use crate::scalar::Real;

/// Fraction of the domain extent kept free between a bump's support and
/// the domain boundary. Independent of `h`, so the same seed yields the
/// same family on every refinement level.
const BUMP_MARGIN_FRACTION: f64 = 0.125;

/// Radial piecewise-linear cutoff: one on the inner ball, zero outside the
/// outer ball, slope `1/(r' − r)` in between.
pub fn cutoff<S: Real>(
    grid: &GridSpec<S>,
    inner: &Ball<S>,
    outer: &Ball<S>,
) -> Result<ScalarField<S>> {
    if inner.center != outer.center {
        return Err(GridError::InvalidBall("cutoff balls must be concentric".into()));
    }
    if !(inner.radius > S::zero() && inner.radius < outer.radius) {
        return Err(GridError::InvalidBall(
            "cutoff needs 0 < r < r'".into(),
        ));
    }
    let width = outer.radius - inner.radius;
    ScalarField::from_fn(*grid, |x| {
        let mut p = [S::zero(); 2];
        p[..x.len()].copy_from_slice(x);
        let dist = outer.distance(&p);
        ((outer.radius - dist) / width).max(S::zero()).min(S::one())
    })
}

/// Compactly supported polynomial bumps `(1 − |x−c|²/s²)³₊`, `count`
/// random centres per scale. Every bump vanishes on the three outermost
/// cell layers, where the discrete divergence theorem picks up boundary
/// terms.
pub fn bump_test_family<S: Real>(
    grid: &GridSpec<S>,
    count: usize,
    scales: &[S],
    seed: u64,
) -> Result<Vec<ScalarField<S>>> {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::with_capacity(count * scales.len());
    for &s in scales {
        if !(s > S::zero()) {
            return Err(GridError::TestFamily("scales must be positive".into()));
        }
        let mut ranges = [(S::zero(), S::zero()); 2];
        for (a, range) in ranges.iter_mut().enumerate().take(d) {
            let (lo, hi) = grid.bounds(a);
            let margin = S::lit(BUMP_MARGIN_FRACTION) * (hi - lo);
            let (clo, chi) = (lo + margin + s, hi - margin - s);
            if clo > chi {
                return Err(GridError::TestFamily(format!(
                    "scale {} does not fit along axis {a}",
                    s.as_f64()
                )));
            }
            // centres must keep the support off the three boundary layers
            let h = grid.spacing()[a];
            if clo - s < lo + S::lit(3.0) * h || chi + s > hi - S::lit(3.0) * h {
                return Err(GridError::TestFamily(format!(
                    "grid too coarse for scale {}",
                    s.as_f64()
                )));
            }
            *range = (clo, chi);
        }
        for _ in 0..count {
            let mut c = [S::zero(); 2];
            for a in 0..d {
                let t = S::lit(rng.gen::<f64>());
                c[a] = ranges[a].0 + t * (ranges[a].1 - ranges[a].0);
            }
            let s2 = s * s;
            family.push(ScalarField::from_fn(*grid, |x| {
                let mut r2 = S::zero();
                for a in 0..d {
                    r2 = r2 + (x[a] - c[a]) * (x[a] - c[a]);
                }
                let t = S::one() - r2 / s2;
                if t > S::zero() {
                    t * t * t
                } else {
                    S::zero()
                }
            })?);
        }
    }
    Ok(family)
}

/// `F^q_{R,M}(z)`: `(z+R)^q` up to `z = M`, continued linearly with matching
/// slope beyond.
pub fn truncated_power<S: Real>(z: S, q: S, shift: S, cap: S) -> S {
    if z <= cap {
        (z + shift).powf(q)
    } else {
        let base = cap + shift;
        base.powf(q) + q * base.powf(q - S::one()) * (z - cap)
    }
}

pub fn truncated_power_derivative<S: Real>(z: S, q: S, shift: S, cap: S) -> S {
    q * (z.min(cap) + shift).powf(q - S::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;

    fn unit_grid(n: usize) -> GridSpec<f64> {
        GridSpec::nodal(2, &[n, n], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn cutoff_profile() {
        let g = GridSpec::<f64>::nodal(2, &[101, 101], &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let inner = Ball::new(&[0.0, 0.0], 0.2);
        let outer = Ball::new(&[0.0, 0.0], 0.6);
        let xi = cutoff(&g, &inner, &outer).unwrap();
        assert_eq!(xi.get(g.index(50, 50)), 1.0);
        assert_eq!(xi.get(g.index(0, 0)), 0.0);
        // (r + r')/2 = 0.4 lies on the grid line x = 0.4
        assert!((xi.get(g.index(70, 50)) - 0.5).abs() < 1e-12);
        let grad = gradient(&xi).unwrap().magnitude();
        let h = g.spacing()[0];
        assert!(grad.max() <= 2.0 / 0.4 + h);
    }

    #[test]
    fn cutoff_rejects_bad_pairs() {
        let g = unit_grid(10);
        let a = Ball::new(&[0.5, 0.5], 0.3);
        let b = Ball::new(&[0.5, 0.5], 0.2);
        assert!(cutoff(&g, &a, &b).is_err());
        let c = Ball::new(&[0.4, 0.5], 0.4);
        assert!(cutoff(&g, &b, &c).is_err());
    }

    #[test]
    fn bump_family_size_and_support() {
        let g = unit_grid(65);
        let fam = bump_test_family(&g, 5, &[0.1, 0.15, 0.2, 0.25], 0).unwrap();
        assert_eq!(fam.len(), 20);
        for phi in &fam {
            for idx in 0..g.len() {
                let (i, j) = g.multi_index(idx);
                if i < 3 || j < 3 || i + 3 >= 65 || j + 3 >= 65 {
                    assert_eq!(phi.get(idx), 0.0);
                }
            }
            assert!(phi.max() > 0.0);
        }
    }

    #[test]
    fn bump_gradients_integrate_to_zero() {
        let g = unit_grid(48);
        for phi in bump_test_family(&g, 3, &[0.12, 0.2], 7).unwrap() {
            let du = gradient(&phi).unwrap();
            for a in 0..2 {
                let s: f64 = du.component(a).iter().sum();
                assert!(s.abs() < 1e-12, "component {a}: {s}");
            }
        }
    }

    #[test]
    fn bump_family_is_seed_deterministic() {
        let g = unit_grid(40);
        let a = bump_test_family(&g, 2, &[0.1], 3).unwrap();
        let b = bump_test_family(&g, 2, &[0.1], 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_power_is_c1_at_cap() {
        let (q, r, m) = (2.5f64, 0.3, 1.7);
        let below = truncated_power(m, q, r, m);
        let above = truncated_power(m + 1e-9, q, r, m);
        assert!((below - (m + r).powf(q)).abs() < 1e-12);
        assert!((above - below).abs() < 1e-7);
        let d1 = truncated_power_derivative(m - 1e-12, q, r, m);
        let d2 = truncated_power_derivative(m + 1.0, q, r, m);
        assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn truncated_power_linear_exponent_is_shift() {
        for z in [0.0f64, 0.5, 3.0, 10.0] {
            assert!((truncated_power(z, 1.0, 0.2, 1.0) - (z + 0.2)).abs() < 1e-14);
        }
    }

    #[test]
    fn truncated_power_large_cap_limit() {
        let (z, q, r) = (2.0f64, 3.0, 0.5);
        assert!((truncated_power(z, q, r, 1e6) - (z + r).powf(q)).abs() < 1e-12);
    }
}
