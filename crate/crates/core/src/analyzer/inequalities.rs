//! Integral inequalities on balls: Caccioppoli, reverse Hölder, Moser,
//! Harnack and the logarithmic John–Nirenberg diagnostic.

use serde::{Deserialize, Serialize};

use super::{AnalyzerError, InequalityRecord, Result};
use crate::grid::{
    a_rk, covered_cells, cutoff, gradient, ball_integral, ball_volume, lp_norm, truncated_power, truncated_power_derivative, Ball,
    GridError, NormSpec, ScalarField,
};
use crate::scalar::{norm, Real};

fn require_nonnegative<S: Real>(u: &ScalarField<S>, ball: &Ball<S>) -> Result<()> {
    for i in covered_cells(u.grid(), ball) {
        let v = u.get(i);
        if v < S::zero() {
            return Err(AnalyzerError::SignViolation { index: i, value: v.as_f64() });
        }
    }
    Ok(())
}

/// `f = ±λ F^q_{R,M}`, signed so that `f′ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Deserialize<'de> + num_traits::One"))]
pub struct TruncatedPower<S> {
    pub q: S,
    pub shift: S,
    pub cap: S,
    #[serde(default = "unit_scale")]
    pub scale: S,
}

fn unit_scale<S: num_traits::One>() -> S {
    S::one()
}

impl<S: Real> TruncatedPower<S> {
    pub fn new(q: S, shift: S, cap: S) -> Self {
        Self { q, shift, cap, scale: S::one() }
    }

    fn sign(&self) -> S {
        if self.q < S::zero() {
            -self.scale
        } else {
            self.scale
        }
    }

    pub fn value(&self, z: S) -> S {
        self.sign() * truncated_power(z, self.q, self.shift, self.cap)
    }

    pub fn derivative(&self, z: S) -> S {
        self.sign() * truncated_power_derivative(z, self.q, self.shift, self.cap)
    }
}

/// `∫|ξDu|^γ f′(u) ≤ C (∫|Dξ|^γ |f(u)|^γ / f′(u)^{γ−1} + ∫|ξ|^γ f′(u))` with
/// the piecewise-linear cutoff between `inner` and `outer`.
pub fn caccioppoli_check<S: Real>(
    u: &ScalarField<S>,
    gamma: S,
    inner: &Ball<S>,
    outer: &Ball<S>,
    f: &TruncatedPower<S>,
    cap: S,
) -> Result<InequalityRecord<S>> {
    if f.q == S::zero() || !(f.shift > S::zero()) || !(f.scale > S::zero()) {
        return Err(AnalyzerError::InvalidConfig("truncated power needs q != 0, shift > 0 and scale > 0".into()));
    }
    let grid = *u.grid();
    grid.require_ball_inside(outer)?;
    let xi = cutoff(&grid, inner, outer)?;
    let dxi = gradient(&xi)?;
    let du = gradient(u)?;
    let d = grid.dim();
    let (mut lhs, mut t1, mut t2) = (S::zero(), S::zero(), S::zero());
    for i in 0..grid.len() {
        let (x, gx) = (xi.get(i), norm(&dxi.at(i)[..d]));
        if x == S::zero() && gx == S::zero() {
            continue;
        }
        let z = u.get(i);
        if !(z + f.shift > S::zero()) {
            return Err(AnalyzerError::SignViolation { index: i, value: z.as_f64() });
        }
        let (fv, fd) = (f.value(z), f.derivative(z));
        lhs = lhs + (x * norm(&du.at(i)[..d])).powf(gamma) * fd;
        t1 = t1 + gx.powf(gamma) * fv.abs().powf(gamma) / fd.powf(gamma - S::one());
        t2 = t2 + x.powf(gamma) * fd;
    }
    let vol = grid.cell_volume();
    let (lhs, t1, t2) = (lhs * vol, t1 * vol, t2 * vol);
    Ok(
        InequalityRecord::new("caccioppoli", outer.center, inner.radius, lhs, t1 + t2, S::one(), cap)
            .with_terms(vec![("cutoff_gradient".into(), t1), ("zero_order".into(), t2)]),
    )
}

/// Which reverse-Hölder branch is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `θ ≥ γ − 1 + k`.
    Unsigned,
    /// `k ≤ θ ≤ γ − 1 − k`, `u ≥ 0` on `B_{2R}`.
    Positive,
    /// `θ ≤ −k`, `u ≥ 0` on `B_{2R}`; the inequality is reversed.
    Negative,
}

/// `a_{R,k}(θ(1+1/d)) ≤ (Cθ²)^{γ/|θ|} a_{R,k}(θ)`, or with the two sides
/// exchanged on the negative branch.
#[allow(clippy::too_many_arguments)]
pub fn reverse_holder_step<S: Real>(
    u: &ScalarField<S>,
    gamma: S,
    center: &[S],
    radius: S,
    k: S,
    theta: S,
    branch: Branch,
    cap: S,
) -> Result<InequalityRecord<S>> {
    let one = S::one();
    let violated = |msg: String| Err(AnalyzerError::BranchPreconditionViolated(msg));
    match branch {
        Branch::Unsigned if theta < gamma - one + k => {
            return violated(format!("unsigned branch needs theta >= gamma - 1 + k, got theta = {theta}"));
        }
        Branch::Positive if theta < k || theta > gamma - one - k => {
            return violated(format!("positive branch needs k <= theta <= gamma - 1 - k, got theta = {theta}"));
        }
        Branch::Negative if theta > -k => {
            return violated(format!("negative branch needs theta <= -k, got theta = {theta}"));
        }
        _ => {}
    }
    if branch != Branch::Unsigned {
        let ball = Ball::new(center, radius * S::lit(2.0));
        u.grid().require_ball_inside(&ball)?;
        require_nonnegative(u, &ball).map_err(|e| match e {
            AnalyzerError::SignViolation { index, value } => {
                AnalyzerError::BranchPreconditionViolated(format!("u = {value} < 0 at cell {index} inside B_2R"))
            }
            other => other,
        })?;
    }
    let d = S::from_usize_lossy(u.grid().dim());
    let raised = theta * (one + one / d);
    let a_theta = a_rk(u, center, radius, k, theta)?;
    let a_raised = a_rk(u, center, radius, k, raised)?;
    let (lhs, base) = if branch == Branch::Negative {
        (a_theta, a_raised)
    } else {
        (a_raised, a_theta)
    };
    let power = gamma / theta.abs();
    let unit = (theta * theta).powf(power) * base;
    Ok(InequalityRecord::new("reverse_holder", Ball::new(center, radius).center, radius, lhs, unit, power, cap)
        .with_terms(vec![
            ("theta".into(), theta),
            ("a(theta)".into(), a_theta),
            ("a(theta(1+1/d))".into(), a_raised),
        ]))
}

/// Largest exponent in the Moser trace.
pub const MOSER_THETA_CAP: f64 = 512.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MoserResult<S> {
    pub record: InequalityRecord<S>,
    /// `(θ_j, a_{R,1}(θ_j))` for `θ_j = λ(1+1/d)^j ≤ 512`.
    pub trace: Vec<(S, S)>,
}

/// `‖u‖_{L^∞(B_R)} ≤ C_λ (R^{−d/λ}‖u‖_{L^λ(B_{2R})} + R)`.
pub fn moser_sup_bound<S: Real>(
    u: &ScalarField<S>,
    gamma: S,
    center: &[S],
    radius: S,
    lambda: S,
    cap: S,
) -> Result<MoserResult<S>> {
    if !(lambda > gamma - S::one()) {
        return Err(AnalyzerError::InvalidConfig(format!("Moser exponent must exceed gamma - 1, got {lambda}")));
    }
    let grid = u.grid();
    let ball = Ball::new(center, radius);
    let double = ball.scaled(S::lit(2.0));
    grid.require_ball_inside(&double)?;
    let d = S::from_usize_lossy(grid.dim());
    let sup = lp_norm(u, &ball, NormSpec::new(S::infinity())?)?;
    let avg = radius.powf(-d / lambda) * lp_norm(u, &double, NormSpec::new(lambda)?)?;
    let record = InequalityRecord::new("moser_sup", ball.center, radius, sup, avg + radius, S::one(), cap)
        .with_terms(vec![("lambda".into(), lambda), ("scaled_norm".into(), avg), ("R".into(), radius)]);
    let mut trace = Vec::new();
    let growth = S::one() + S::one() / d;
    let mut theta = lambda;
    while theta <= S::lit(MOSER_THETA_CAP) {
        trace.push((theta, a_rk(u, center, radius, S::one(), theta)?));
        theta = theta * growth;
    }
    Ok(MoserResult { record, trace })
}

/// `max_{B_R} u ≤ C (min_{B_R} u + R)` for `u ≥ 0` on `B_{2R}`.
pub fn harnack_ratio<S: Real>(u: &ScalarField<S>, center: &[S], radius: S, cap: S) -> Result<InequalityRecord<S>> {
    let ball = Ball::new(center, radius);
    let double = ball.scaled(S::lit(2.0));
    u.grid().require_ball_inside(&double)?;
    require_nonnegative(u, &double)?;
    let cells = covered_cells(u.grid(), &ball);
    if cells.is_empty() {
        return Err(GridError::EmptyBall {
            center: [ball.center[0].as_f64(), ball.center[1].as_f64()],
            radius: radius.as_f64(),
        }
        .into());
    }
    let (lo, hi) = cells
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &i| (lo.min(u.get(i)), hi.max(u.get(i))));
    Ok(InequalityRecord::new("harnack", ball.center, radius, hi, lo + radius, S::one(), cap)
        .with_terms(vec![("max".into(), hi), ("min".into(), lo)]))
}

/// Decay exponent implied by a Harnack constant: `2^{−μ} = (C−1)/(C+1)`.
pub fn harnack_exponent<S: Real>(c: S) -> S {
    if c <= S::one() {
        S::infinity()
    } else {
        ((c + S::one()) / (c - S::one())).log2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JnDiagnostic<S> {
    /// `max r^{1−d} ‖Dv‖_{L¹(B_r)}` over the sampled balls.
    pub hypothesis_bound: S,
    /// `(ε, (⨍e^{εv} ⨍e^{−εv})^{1/ε})` for every ε of the grid.
    pub ratios: Vec<(S, S)>,
    /// Largest ε whose ratio stays within the cap.
    pub best_epsilon: Option<S>,
    pub records: Vec<InequalityRecord<S>>,
}

/// Five centres by four radii inside `B_R`.
fn sample_balls<S: Real>(center: &[S], radius: S, dim: usize) -> Vec<Ball<S>> {
    let half = radius / S::lit(2.0);
    let offsets: Vec<[S; 2]> = if dim == 1 {
        [0.0, 0.5, -0.5, 0.25, -0.25]
            .iter()
            .map(|&o| [half * S::lit(o), S::zero()])
            .collect()
    } else {
        [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)]
            .iter()
            .map(|&(a, b)| [half * S::lit(a), half * S::lit(b)])
            .collect()
    };
    let mut out = Vec::with_capacity(20);
    for o in offsets {
        let c = [center[0] + o[0], center.get(1).copied().unwrap_or(S::zero()) + o[1]];
        for j in 0..4 {
            out.push(Ball::new(&c[..dim], half / S::lit(2.0).powi(j)));
        }
    }
    out
}

/// Hypothesis and conclusion of the John–Nirenberg step for
/// `v = log(u + R)` on `B_R`. The ratio is normalised so that constant
/// fields give exactly one.
pub fn log_jn_diagnostic<S: Real>(
    u: &ScalarField<S>,
    center: &[S],
    radius: S,
    epsilons: &[S],
    cap: S,
) -> Result<JnDiagnostic<S>> {
    let grid = *u.grid();
    let ball = Ball::new(center, radius);
    grid.require_ball_inside(&ball)?;
    require_nonnegative(u, &ball)?;
    let v = u.map(|z| (z.abs() + radius).ln())?;
    let dv = gradient(&v)?.magnitude();
    let d = grid.dim();
    let mut hypothesis_bound = S::zero();
    for b in sample_balls(center, radius, d) {
        match lp_norm(&dv, &b, NormSpec::new(S::one())?) {
            Ok(n) => {
                let scaled = b.radius.powf(S::one() - S::from_usize_lossy(d)) * n;
                hypothesis_bound = hypothesis_bound.max(scaled);
            }
            Err(GridError::EmptyBall { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    // quadrature measure, so that a constant v gives a ratio of exactly one
    let measure = ball_volume(&grid, &ball);
    let mut ratios = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > S::zero()) {
            return Err(AnalyzerError::InvalidConfig("epsilon grid must be positive".into()));
        }
        let up = ball_integral(&v.map(|w| (eps * w).exp())?, &ball)? / measure;
        let down = ball_integral(&v.map(|w| (-eps * w).exp())?, &ball)? / measure;
        ratios.push((eps, (up * down).powf(S::one() / eps)));
    }
    let best = ratios
        .iter()
        .filter(|(_, r)| *r <= cap)
        .map(|&(e, _)| e)
        .fold(None, |acc: Option<S>, e| Some(acc.map_or(e, |a| a.max(e))));
    let mut records = vec![InequalityRecord::new(
        "jn_hypothesis",
        ball.center,
        radius,
        hypothesis_bound,
        S::one(),
        S::one(),
        S::infinity(),
    )
    .estimate_only()];
    let chosen = best.or_else(|| ratios.iter().map(|&(e, _)| e).reduce(S::min));
    if let Some(eps) = chosen {
        let ratio = ratios.iter().find(|(e, _)| *e == eps).map(|&(_, r)| r).unwrap_or(S::nan());
        records.push(
            InequalityRecord::new("jn_epsilon", ball.center, radius, ratio, S::one(), S::one(), cap)
                .with_terms(vec![("epsilon".into(), eps)])
                .estimate_only(),
        );
    }
    Ok(JnDiagnostic {
        hypothesis_bound,
        ratios,
        best_epsilon: best,
        records,
    })
}
