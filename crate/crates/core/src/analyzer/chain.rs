//! Dyadic ball chains, oscillation decay and Hölder exponent fits.

use super::{AnalyzerError, InequalityRecord, Result};
use crate::grid::{covered_cells, oscillation, Ball, GridSpec, ScalarField};
use crate::scalar::{linear_fit, Real};

/// Chains stop before a ball covers fewer cells than this.
pub const MIN_CHAIN_CELLS: usize = 16;

/// Concentric balls with radii `R_j = 2^{−j} R₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallChain<S> {
    pub center: [S; 2],
    pub radii: Vec<S>,
}

impl<S: Real> BallChain<S> {
    pub fn dyadic(center: &[S], r0: S, levels: usize) -> Result<Self> {
        if !(r0 > S::zero() && r0.is_finite()) || levels < 2 {
            return Err(AnalyzerError::InvalidChain("need r0 > 0 and at least two levels".into()));
        }
        let radii = (0..levels).map(|j| r0 / S::lit(2.0).powi(j as i32)).collect();
        Ok(Self {
            center: Ball::new(center, r0).center,
            radii,
        })
    }

    /// Longest dyadic chain whose balls each cover at least
    /// [`MIN_CHAIN_CELLS`] cells of `grid`. Balls may reach past the domain;
    /// only the covered cells count.
    pub fn fitted(grid: &GridSpec<S>, center: &[S], r0: S) -> Result<Self> {
        if !(r0 > S::zero() && r0.is_finite()) {
            return Err(AnalyzerError::InvalidChain("need r0 > 0".into()));
        }
        let mut radii = Vec::new();
        let mut r = r0;
        while radii.len() < 60 && covered_cells(grid, &Ball::new(center, r)).len() >= MIN_CHAIN_CELLS {
            radii.push(r);
            r = r / S::lit(2.0);
        }
        if radii.len() < 2 {
            return Err(AnalyzerError::InvalidChain(format!(
                "fewer than two balls of radius <= {r0} cover {MIN_CHAIN_CELLS} cells"
            )));
        }
        Ok(Self {
            center: Ball::new(center, r0).center,
            radii,
        })
    }

    pub fn ball(&self, j: usize) -> Ball<S> {
        Ball {
            center: self.center,
            radius: self.radii[j],
        }
    }
}

/// One step `B_{R_{j−1}} → B_{R_j}` of the oscillation decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscStep<S> {
    pub r_outer: S,
    pub r_inner: S,
    pub osc_outer: S,
    pub osc_inner: S,
    /// `(osc_j − 2R_j)/osc_{j−1}` clamped to `[2^{−52}, 1]`; `None` when
    /// `osc_{j−1}` is degenerate.
    pub factor: Option<S>,
    /// `μ_j = −log₂ factor`.
    pub mu: Option<S>,
}

impl<S: Real> OscStep<S> {
    pub fn record(&self, center: [S; 2]) -> InequalityRecord<S> {
        // osc_j ≤ 2^{−μ} osc_{j−1} + 2R_j, with 2^{−μ} in the constant slot
        let lhs = self.osc_inner - S::lit(2.0) * self.r_inner;
        InequalityRecord::new("osc_decay", center, self.r_inner, lhs, self.osc_outer, S::one(), S::one())
            .with_terms(vec![("mu".into(), self.mu.unwrap_or(S::nan()))])
            .estimate_only()
    }
}

fn oscillations<S: Real>(u: &ScalarField<S>, chain: &BallChain<S>) -> Result<Vec<S>> {
    let osc = (0..chain.radii.len())
        .map(|j| oscillation(u, &chain.ball(j)))
        .collect::<std::result::Result<Vec<S>, _>>()?;
    if let Some(j) = (1..osc.len()).find(|&j| osc[j] > osc[j - 1]) {
        return Err(AnalyzerError::InvalidChain(format!(
            "oscillation grows from radius {} to {}",
            chain.radii[j - 1],
            chain.radii[j]
        )));
    }
    Ok(osc)
}

pub fn osc_decay<S: Real>(u: &ScalarField<S>, chain: &BallChain<S>) -> Result<Vec<OscStep<S>>> {
    let osc = oscillations(u, chain)?;
    let floor = S::epsilon();
    Ok((1..osc.len())
        .map(|j| {
            let (r_outer, r_inner) = (chain.radii[j - 1], chain.radii[j]);
            let factor = if osc[j - 1] < S::lit(super::DEGENERATE_DENOMINATOR) {
                None
            } else {
                Some(((osc[j] - S::lit(2.0) * r_inner) / osc[j - 1]).max(floor).min(S::one()))
            };
            OscStep {
                r_outer,
                r_inner,
                osc_outer: osc[j - 1],
                osc_inner: osc[j],
                factor,
                mu: factor.map(|f| -f.log2()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit<S> {
    pub mu_hat: S,
    pub intercept: S,
    pub r2: S,
    pub chain: BallChain<S>,
    /// `(r, osc_{B_r} u)` for the scales entering the fit.
    pub points: Vec<(S, S)>,
}

/// Slope of `log osc_{B_r} u` against `log r`, skipping the `drop_first`
/// largest balls.
pub fn holder_fit<S: Real>(u: &ScalarField<S>, chain: &BallChain<S>, drop_first: usize) -> Result<HolderFit<S>> {
    let osc = oscillations(u, chain)?;
    let points: Vec<(S, S)> = chain.radii.iter().copied().zip(osc).skip(drop_first).collect();
    if points.len() < 2 {
        return Err(AnalyzerError::DegenerateFit("fewer than two scales left".into()));
    }
    if points.iter().any(|&(_, o)| o < S::lit(super::DEGENERATE_DENOMINATOR)) {
        return Err(AnalyzerError::DegenerateFit("oscillation vanishes on the chain".into()));
    }
    let xs: Vec<S> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<S> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) =
        linear_fit(&xs, &ys).ok_or_else(|| AnalyzerError::DegenerateFit("regression failed".into()))?;
    let r2 = if r2.is_finite() { r2.max(S::zero()).min(S::one()) } else { S::one() };
    Ok(HolderFit {
        mu_hat: slope,
        intercept,
        r2,
        chain: chain.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    fn grid() -> GridSpec<f64> {
        GridSpec::nodal(2, &[129, 129], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn affine_field_has_unit_exponent() {
        let g = grid();
        let chain = BallChain::fitted(&g, &[0.5, 0.5], 0.25).unwrap();
        let u = ScalarField::from_fn(g, |x| 3.0 * x[0] + 2.0).unwrap();
        let fit = holder_fit(&u, &chain, 0).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < 0.02, "{}", fit.mu_hat);
        assert!(fit.r2 > 0.999);
        // oblique slopes lose a little at the smallest balls, where the
        // lattice misses the extremal direction
        let u = ScalarField::from_fn(g, |x| 3.0 * x[0] - x[1]).unwrap();
        let fit = holder_fit(&u, &chain, 0).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < 0.05, "{}", fit.mu_hat);
    }

    #[test]
    fn radial_power_exponents() {
        let g = grid();
        for kappa in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
            let u = ScalarField::from_fn(g, |x| norm(x).powf(kappa)).unwrap();
            let chain = BallChain::fitted(&g, &[0.0, 0.0], 0.5).unwrap();
            let fit = holder_fit(&u, &chain, 0).unwrap();
            assert!((fit.mu_hat - kappa).abs() <= 0.03 * kappa, "{kappa}: {}", fit.mu_hat);
            let steps = osc_decay(&u, &chain).unwrap();
            assert!(steps.iter().all(|s| s.mu.unwrap() > 0.0));
        }
    }

    #[test]
    fn constant_field_is_degenerate() {
        let g = grid();
        let u = ScalarField::constant(g, 1.0);
        let chain = BallChain::dyadic(&[0.5, 0.5], 0.25, 4).unwrap();
        assert!(osc_decay(&u, &chain).unwrap().iter().all(|s| s.mu.is_none()));
        assert!(matches!(holder_fit(&u, &chain, 0), Err(AnalyzerError::DegenerateFit(_))));
    }

    #[test]
    fn fitted_chain_respects_cell_floor() {
        let g = grid();
        let chain = BallChain::fitted(&g, &[0.5, 0.5], 0.5).unwrap();
        let last = chain.ball(chain.radii.len() - 1);
        assert!(covered_cells(&g, &last).len() >= MIN_CHAIN_CELLS);
        assert!(covered_cells(&g, &last.scaled(0.5)).len() < MIN_CHAIN_CELLS);
    }
}
