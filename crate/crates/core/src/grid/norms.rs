//! Ball quadrature and the extended `L^p` family on balls.

use super::{Ball, GridError, GridSpec, Result, ScalarField, VectorField};
use crate::scalar::{unit_ball_volume, Real};

/// Sub-samples per axis used to estimate the covered fraction of a cell cut
/// by the ball boundary.
const BOUNDARY_SUBSAMPLES: usize = 4;

/// Exponent of an `L^p` quantity; `p` may be `±∞` but never zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec<S> {
    p: S,
    scale_invariant: bool,
}

impl<S: Real> NormSpec<S> {
    pub fn new(p: S) -> Result<Self> {
        if p == S::zero() || p.is_nan() {
            return Err(GridError::ZeroExponent);
        }
        Ok(Self {
            p,
            scale_invariant: false,
        })
    }

    /// Same exponent, multiplied by `R^{-d/p}`.
    pub fn scale_invariant(p: S) -> Result<Self> {
        Ok(Self {
            scale_invariant: true,
            ..Self::new(p)?
        })
    }

    pub fn p(&self) -> S {
        self.p
    }

    pub fn is_scale_invariant(&self) -> bool {
        self.scale_invariant
    }
}

fn index_range<S: Real>(grid: &GridSpec<S>, axis: usize, lo: S, hi: S) -> (usize, usize) {
    if axis >= grid.dim() {
        return (0, 1);
    }
    let o = grid.origin()[axis];
    let h = grid.spacing()[axis];
    let n = grid.shape()[axis];
    let a = ((lo - o) / h).floor();
    let b = ((hi - o) / h).ceil();
    let clamp = |v: S| -> usize {
        if v <= S::zero() {
            0
        } else {
            v.to_usize().unwrap_or(usize::MAX).min(n)
        }
    };
    (clamp(a), clamp(b))
}

fn candidate_cells<S: Real>(grid: &GridSpec<S>, ball: &Ball<S>) -> Vec<usize> {
    let (i0, i1) = index_range(grid, 0, ball.center[0] - ball.radius, ball.center[0] + ball.radius);
    let (j0, j1) = index_range(grid, 1, ball.center[1] - ball.radius, ball.center[1] + ball.radius);
    let mut out = Vec::with_capacity((i1 - i0) * (j1 - j0));
    for i in i0..i1 {
        for j in j0..j1 {
            out.push(grid.index(i, j));
        }
    }
    out
}

/// Fraction of each cell lying inside the ball, for cells with a positive
/// fraction. Exact in 1-D; in 2-D cells cut by the sphere are sub-sampled.
pub fn ball_weights<S: Real>(grid: &GridSpec<S>, ball: &Ball<S>) -> Vec<(usize, S)> {
    let h = grid.spacing();
    let half = S::lit(0.5);
    let r = ball.radius;
    let mut out = Vec::new();
    for idx in candidate_cells(grid, ball) {
        let x = grid.center(idx);
        if grid.dim() == 1 {
            let lo = (x[0] - half * h[0]).max(ball.center[0] - r);
            let hi = (x[0] + half * h[0]).min(ball.center[0] + r);
            if hi > lo {
                out.push((idx, (hi - lo) / h[0]));
            }
            continue;
        }
        // nearest and farthest point of the cell from the centre
        let mut near2 = S::zero();
        let mut far2 = S::zero();
        for a in 0..2 {
            let lo = x[a] - half * h[a] - ball.center[a];
            let hi = x[a] + half * h[a] - ball.center[a];
            let n = if lo > S::zero() {
                lo
            } else if hi < S::zero() {
                -hi
            } else {
                S::zero()
            };
            let f = lo.abs().max(hi.abs());
            near2 = near2 + n * n;
            far2 = far2 + f * f;
        }
        let r2 = r * r;
        if near2 > r2 {
            continue;
        }
        if far2 <= r2 {
            out.push((idx, S::one()));
            continue;
        }
        let k = BOUNDARY_SUBSAMPLES;
        let kf = S::from_usize_lossy(k);
        let mut inside = 0usize;
        for a in 0..k {
            for b in 0..k {
                let sx = x[0] - half * h[0] + (S::from_usize_lossy(a) + half) * h[0] / kf;
                let sy = x[1] - half * h[1] + (S::from_usize_lossy(b) + half) * h[1] / kf;
                let dx = sx - ball.center[0];
                let dy = sy - ball.center[1];
                if dx * dx + dy * dy <= r2 {
                    inside += 1;
                }
            }
        }
        if inside > 0 {
            out.push((idx, S::from_usize_lossy(inside) / (kf * kf)));
        }
    }
    out
}

/// Cells whose centre lies in the closed ball; these carry the discrete
/// essential supremum and infimum.
pub fn covered_cells<S: Real>(grid: &GridSpec<S>, ball: &Ball<S>) -> Vec<usize> {
    let tol = S::one() + S::lit(1e-9);
    candidate_cells(grid, ball)
        .into_iter()
        .filter(|&idx| ball.distance(&grid.center(idx)) <= ball.radius * tol)
        .collect()
}

fn empty_ball<S: Real>(ball: &Ball<S>) -> GridError {
    GridError::EmptyBall {
        center: [ball.center[0].as_f64(), ball.center[1].as_f64()],
        radius: ball.radius.as_f64(),
    }
}

/// `∫_B v` by area-fraction quadrature.
pub fn ball_integral<S: Real>(v: &ScalarField<S>, ball: &Ball<S>) -> Result<S> {
    let w = ball_weights(v.grid(), ball);
    if w.is_empty() {
        return Err(empty_ball(ball));
    }
    let vol = v.grid().cell_volume();
    Ok(w.iter().map(|&(idx, f)| f * v.get(idx)).sum::<S>() * vol)
}

/// Quadrature measure of the ball.
pub fn ball_volume<S: Real>(grid: &GridSpec<S>, ball: &Ball<S>) -> S {
    ball_weights(grid, ball).iter().map(|&(_, f)| f).sum::<S>() * grid.cell_volume()
}

/// `|B₁|⁻¹ R^{-d} ∫_{B_R} v`.
pub fn integral_average<S: Real>(v: &ScalarField<S>, ball: &Ball<S>) -> Result<S> {
    let d = v.grid().dim();
    let denom = unit_ball_volume::<S>(d) * ball.radius.powi(d as i32);
    Ok(ball_integral(v, ball)? / denom)
}

/// `‖v‖_{L^p(B)}` for `p ∈ [−∞, ∞] \ {0}`.
///
/// Negative exponents follow `‖v‖_{L^p} = ‖v⁻¹‖⁻¹_{L^{−p}}` and require
/// `v ≥ 0` on the ball; a zero cell makes the result zero.
pub fn lp_norm<S: Real>(v: &ScalarField<S>, ball: &Ball<S>, spec: NormSpec<S>) -> Result<S> {
    let grid = v.grid();
    let p = spec.p;
    let raw = if p.is_infinite() {
        let cells = covered_cells(grid, ball);
        if cells.is_empty() {
            return Err(empty_ball(ball));
        }
        if p > S::zero() {
            cells
                .iter()
                .map(|&i| v.get(i).abs())
                .fold(S::zero(), S::max)
        } else {
            check_nonnegative(v, cells.iter().copied())?;
            cells
                .iter()
                .map(|&i| v.get(i))
                .fold(S::infinity(), S::min)
        }
    } else {
        let weights = ball_weights(grid, ball);
        if weights.is_empty() {
            return Err(empty_ball(ball));
        }
        if p < S::zero() {
            check_nonnegative(v, weights.iter().map(|&(i, _)| i))?;
        }
        let mags = weights.iter().map(|&(i, _)| v.get(i).abs());
        // factor out the dominant magnitude so large |p| neither overflows
        // nor underflows
        let scale = if p > S::zero() {
            mags.fold(S::zero(), S::max)
        } else {
            mags.fold(S::infinity(), S::min)
        };
        if scale == S::zero() {
            S::zero()
        } else {
            let sum: S = weights
                .iter()
                .map(|&(i, f)| f * (v.get(i).abs() / scale).powf(p))
                .sum();
            scale * (sum * grid.cell_volume()).powf(S::one() / p)
        }
    };
    if spec.scale_invariant {
        Ok(raw * scale_factor(grid.dim(), ball.radius, p))
    } else {
        Ok(raw)
    }
}

fn check_nonnegative<S: Real>(v: &ScalarField<S>, cells: impl Iterator<Item = usize>) -> Result<()> {
    for i in cells {
        let value = v.get(i);
        if value < S::zero() {
            return Err(GridError::NegativePNonNonnegativeField {
                index: i,
                value: value.as_f64(),
            });
        }
    }
    Ok(())
}

/// `R^{-d/p}`, equal to one for `p = ±∞`.
fn scale_factor<S: Real>(dim: usize, radius: S, p: S) -> S {
    if p.is_infinite() {
        S::one()
    } else {
        radius.powf(-S::from_usize_lossy(dim) / p)
    }
}

/// `R^{-d/p} ‖v‖_{L^p(B_R)}`. Divided by `|B|^{1/p} R^{-d/p}` it is the
/// power mean of `|v|`, which is non-decreasing in `p`.
pub fn scale_invariant_norm<S: Real>(v: &ScalarField<S>, ball: &Ball<S>, p: S) -> Result<S> {
    lp_norm(v, ball, NormSpec::scale_invariant(p)?)
}

/// `R^{1-d/p} ‖Dv‖_{L^p(B_R)}` for a precomputed gradient.
pub fn scale_invariant_gradient_norm<S: Real>(
    grad: &VectorField<S>,
    ball: &Ball<S>,
    p: S,
) -> Result<S> {
    let mag = grad.magnitude();
    Ok(ball.radius * scale_invariant_norm(&mag, ball, p)?)
}

/// Discrete oscillation `max_B v − min_B v` over covered cells.
pub fn oscillation<S: Real>(v: &ScalarField<S>, ball: &Ball<S>) -> Result<S> {
    let cells = covered_cells(v.grid(), ball);
    if cells.is_empty() {
        return Err(empty_ball(ball));
    }
    let (lo, hi) = cells.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &i| {
        (lo.min(v.get(i)), hi.max(v.get(i)))
    });
    Ok(hi - lo)
}

/// `a_{R,k}(θ) = R^{-d/θ} ‖ |u| + R ‖_{L^θ(B_{R(1+k/|θ|)})}`.
///
/// For `θ = ±∞` the ball is `B_R` itself.
pub fn a_rk<S: Real>(u: &ScalarField<S>, center: &[S], radius: S, k: S, theta: S) -> Result<S> {
    if theta == S::zero() || theta.is_nan() {
        return Err(GridError::ZeroExponent);
    }
    if !(radius > S::zero()) || !(k > S::zero()) {
        return Err(GridError::InvalidBall(
            "a_rk needs positive radius and k".into(),
        ));
    }
    let grid = u.grid();
    let big = if theta.is_infinite() {
        radius
    } else {
        radius * (S::one() + k / theta.abs())
    };
    let ball = Ball::new(center, big);
    grid.require_ball_inside(&ball)?;
    let shifted = u.map(|v| v.abs() + radius)?;
    let norm = lp_norm(&shifted, &ball, NormSpec::new(theta)?)?;
    Ok(scale_factor(grid.dim(), radius, theta) * norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(n: usize, half: f64) -> GridSpec<f64> {
        let h = 2.0 * half / n as f64;
        GridSpec::new(2, &[n, n], &[h, h], &[-half, -half]).unwrap()
    }

    #[test]
    fn weights_of_interior_ball_sum_close_to_area() {
        let g = square(200, 1.5);
        let area = ball_volume(&g, &Ball::new(&[0.0, 0.0], 1.0));
        assert!((area - PI).abs() < 2e-3, "area {area}");
    }

    #[test]
    fn one_dimensional_weights_are_exact() {
        let g = GridSpec::<f64>::new(1, &[10], &[0.1], &[0.0]).unwrap();
        let len = ball_volume(&g, &Ball::new(&[0.43], 0.21));
        assert!((len - 0.42).abs() < 1e-12);
    }

    #[test]
    fn negative_exponent_of_constant_two() {
        // ‖2‖_{L^{-1}(B₁)} = (∫ 1/2)^{-1} = 2/π
        let g = square(400, 1.25);
        let v = ScalarField::constant(g, 2.0);
        let val = lp_norm(&v, &Ball::new(&[0.0, 0.0], 1.0), NormSpec::new(-1.0).unwrap()).unwrap();
        let area = ball_volume(&g, &Ball::new(&[0.0, 0.0], 1.0));
        assert!((val - 2.0 / area).abs() < 1e-12);
        assert!((val - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn infinite_exponents_of_constant() {
        let g = square(40, 1.0);
        let v = ScalarField::constant(g, 3.0);
        let b = Ball::new(&[0.0, 0.0], 0.5);
        for p in [f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(lp_norm(&v, &b, NormSpec::new(p).unwrap()).unwrap(), 3.0);
        }
    }

    #[test]
    fn zero_cell_makes_negative_norm_vanish() {
        let g = square(20, 1.0);
        let mut vals = vec![1.0; g.len()];
        vals[g.index(10, 10)] = 0.0;
        let v = ScalarField::new(g, vals).unwrap();
        let b = Ball::new(&[0.0, 0.0], 0.5);
        assert_eq!(lp_norm(&v, &b, NormSpec::new(-2.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn negative_exponent_rejects_negative_values() {
        let g = square(20, 1.0);
        let v = ScalarField::from_fn(g, |x| x[0]).unwrap();
        let b = Ball::new(&[0.0, 0.0], 0.5);
        let err = lp_norm(&v, &b, NormSpec::new(-1.0).unwrap()).unwrap_err();
        assert!(matches!(err, GridError::NegativePNonNonnegativeField { .. }));
    }

    #[test]
    fn zero_exponent_rejected() {
        assert_eq!(NormSpec::new(0.0f64), Err(GridError::ZeroExponent));
    }

    #[test]
    fn odd_function_averages_to_zero() {
        let g = square(101, 1.0);
        let v = ScalarField::from_fn(g, |x| x[0]).unwrap();
        let avg = integral_average(&v, &Ball::new(&[0.0, 0.0], 0.7)).unwrap();
        assert!(avg.abs() < 1e-12);
    }

    #[test]
    fn a_rk_of_zero_field_is_volume_factor() {
        let g = square(200, 1.0);
        let u = ScalarField::zeros(g);
        let (r, k, theta) = (0.25f64, 1.0, 4.0);
        let big = Ball::new(&[0.0, 0.0], r * (1.0 + k / theta));
        let expected = r.powf(-2.0 / theta) * r * ball_volume(&g, &big).powf(1.0 / theta);
        let got = a_rk(&u, &[0.0, 0.0], r, k, theta).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn a_rk_at_infinity_is_sup_on_b_r() {
        let g = square(100, 1.0);
        let u = ScalarField::from_fn(g, |x| x[0] + 0.1).unwrap();
        let got = a_rk(&u, &[0.0, 0.0], 0.3, 1.0, f64::INFINITY).unwrap();
        let sup = lp_norm(
            &u.map(|v| v.abs() + 0.3).unwrap(),
            &Ball::new(&[0.0, 0.0], 0.3),
            NormSpec::new(f64::INFINITY).unwrap(),
        )
        .unwrap();
        assert_eq!(got, sup);
    }

    #[test]
    fn a_rk_rejects_escaping_ball() {
        let g = square(50, 1.0);
        let u = ScalarField::zeros(g);
        let err = a_rk(&u, &[0.8, 0.0], 0.3, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, GridError::BallEscapesDomain { .. }));
    }
}
