//! Weak-solution residuals and the pointwise density bounds.

use rayon::prelude::*;

use super::{AnalyzerError, InequalityRecord, Result};
use crate::grid::{gradient, GridError, GridSpec, ScalarField, VectorField};
use crate::hamiltonian::{HamiltonianModel, HamiltonianParams};
use crate::scalar::{norm, Real};
use crate::solver::SolutionPair;

/// Density at which the `m → 0⁺` limit is evaluated on `{m = 0}`.
pub const ZERO_DENSITY_PROBE: f64 = 1e-14;

fn check_pair<S: Real>(pair: &SolutionPair<S>) -> Result<GridSpec<S>> {
    if pair.u.grid() != pair.m.grid() {
        return Err(GridError::GridMismatch.into());
    }
    if let Some(i) = pair.m.values().iter().position(|&v| v < S::zero()) {
        return Err(AnalyzerError::ModelMismatch(format!("density is negative at cell {i}")));
    }
    Ok(*pair.u.grid())
}

fn check_model<S: Real>(model: &HamiltonianModel<S>, grid: &GridSpec<S>) -> Result<()> {
    if !model.is_radial() && model.momentum_dim() != grid.dim() {
        return Err(AnalyzerError::ModelMismatch(format!(
            "model acts on {}-D momenta, grid is {}-D",
            model.momentum_dim(),
            grid.dim()
        )));
    }
    Ok(())
}

fn interior<S: Real>(grid: &GridSpec<S>) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| !grid.is_boundary(i))
}

fn density_or_probe<S: Real>(m: S) -> S {
    if m > S::zero() {
        m
    } else {
        S::lit(ZERO_DENSITY_PROBE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HjbResidual<S> {
    /// `H(x, Du, m)` on every cell.
    pub field: ScalarField<S>,
    /// `max |h|` over interior cells with `m > 0`.
    pub max_abs_positive: S,
    /// `max h` over interior cells with `m = 0`; `−∞` when there are none.
    pub max_zero_set: S,
    /// `h = 0` on `{m > 0}` and `h ≤ 0` on `{m = 0}`, both up to `tol`.
    pub records: Vec<InequalityRecord<S>>,
}

pub fn hjb_residual<S: Real>(pair: &SolutionPair<S>, model: &HamiltonianModel<S>, tol: S) -> Result<HjbResidual<S>> {
    let grid = check_pair(pair)?;
    check_model(model, &grid)?;
    let du = gradient(&pair.u)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.center(i);
            model.eval_h(&x, &du.at(i), density_or_probe(pair.m.get(i)))
        })
        .collect::<std::result::Result<Vec<S>, _>>()?;
    let field = ScalarField::new(grid, values)?;
    let mut max_abs_positive = S::zero();
    let mut max_zero_set = S::neg_infinity();
    for i in interior(&grid) {
        let h = field.get(i);
        if pair.m.get(i) > S::zero() {
            max_abs_positive = max_abs_positive.max(h.abs());
        } else {
            max_zero_set = max_zero_set.max(h);
        }
    }
    let one = S::one();
    let centre = [S::zero(); 2];
    let records = vec![
        InequalityRecord::new("hjb_identity", centre, S::zero(), max_abs_positive, tol, one, one),
        InequalityRecord::new("hjb_subsolution", centre, S::zero(), max_zero_set.max(S::zero()), tol, one, one),
    ];
    Ok(HjbResidual {
        field,
        max_abs_positive,
        max_zero_set,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResidual<S> {
    /// `∫ j·Dφ`.
    pub raw: S,
    pub j_norm: S,
    pub dphi_norm: S,
    /// `|∫ j·Dφ| / (‖j‖_{γ′} ‖Dφ‖_γ)`; zero when `∫ j·Dφ = 0`, NaN when only
    /// the normalisation vanishes.
    pub normalized: S,
}

fn field_norm<S: Real>(v: &VectorField<S>, p: S) -> S {
    let grid = v.grid();
    let sum: S = (0..grid.len())
        .map(|i| norm(&v.at(i)[..grid.dim()]).powf(p))
        .sum();
    (sum * grid.cell_volume()).powf(S::one() / p)
}

/// Flux `j = m·D_pH(x, Du, m)`; on `{m = 0}` the limit along `m → 0⁺` with
/// `p` fixed.
pub fn flux<S: Real>(pair: &SolutionPair<S>, model: &HamiltonianModel<S>) -> Result<VectorField<S>> {
    let grid = check_pair(pair)?;
    check_model(model, &grid)?;
    let du = gradient(&pair.u)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let m = density_or_probe(pair.m.get(i));
            let d = model.eval_dph(&grid.center(i), &du.at(i), m)?;
            Ok([m * d[0], m * d[1]])
        })
        .collect::<std::result::Result<Vec<[S; 2]>, crate::hamiltonian::HamiltonianError>>()?;
    let components = (0..grid.dim())
        .map(|a| values.iter().map(|v| v[a]).collect())
        .collect();
    Ok(VectorField::new(grid, components)?)
}

pub fn transport_residual<S: Real>(
    pair: &SolutionPair<S>,
    model: &HamiltonianModel<S>,
    family: &[ScalarField<S>],
) -> Result<Vec<TransportResidual<S>>> {
    let j = flux(pair, model)?;
    let grid = *j.grid();
    let gamma = model.params().gamma();
    let gamma_conj = gamma / (gamma - S::one());
    let j_norm = field_norm(&j, gamma_conj);
    family
        .iter()
        .map(|phi| {
            if phi.grid() != &grid {
                return Err(GridError::GridMismatch.into());
            }
            let dphi = gradient(phi)?;
            let raw = (0..grid.len())
                .map(|i| {
                    let (a, b) = (j.at(i), dphi.at(i));
                    a[0] * b[0] + a[1] * b[1]
                })
                .sum::<S>()
                * grid.cell_volume();
            let dphi_norm = field_norm(&dphi, gamma);
            let denom = j_norm * dphi_norm;
            let normalized = if raw == S::zero() {
                S::zero()
            } else if denom < S::lit(super::DEGENERATE_DENOMINATOR) {
                S::nan()
            } else {
                raw.abs() / denom
            };
            Ok(TransportResidual {
                raw,
                j_norm,
                dphi_norm,
                normalized,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseBounds<S> {
    /// Smallest `C` with `m ≤ C|Du|^{1/δ} + C`.
    pub c_upper: S,
    /// Smallest `C` with `m ≥ C⁻¹|Du|^{1/δ} − C`.
    pub c_lower: S,
    pub records: Vec<InequalityRecord<S>>,
}

/// Both constants over interior cells; each record keeps the binding cell.
pub fn pointwise_bound_constant<S: Real>(
    pair: &SolutionPair<S>,
    params: &HamiltonianParams<S>,
    cap: S,
) -> Result<PointwiseBounds<S>> {
    let grid = check_pair(pair)?;
    let du = gradient(&pair.u)?;
    let inv_delta = S::one() / params.delta();
    let two = S::lit(2.0);
    let mut upper: Option<(S, usize)> = None;
    let mut lower: Option<(S, usize)> = None;
    let power = |i: usize| norm(&du.at(i)[..grid.dim()]).powf(inv_delta);
    for i in interior(&grid) {
        let (m, x) = (pair.m.get(i), power(i));
        let cu = m / (x + S::one());
        let cl = (-m + (m * m + S::lit(4.0) * x).sqrt()) / two;
        if upper.is_none_or(|(c, _)| cu > c) {
            upper = Some((cu, i));
        }
        if lower.is_none_or(|(c, _)| cl > c) {
            lower = Some((cl, i));
        }
    }
    let (Some((_, iu)), Some((_, il))) = (upper, lower) else {
        return Err(GridError::GridTooSmall { axis: 0, cells: grid.shape()[0] }.into());
    };
    let one = S::one();
    let up = InequalityRecord::new("pointwise_upper", grid.center(iu), S::zero(), pair.m.get(iu), power(iu) + one, one, cap)
        .with_terms(vec![("m".into(), pair.m.get(iu)), ("|Du|^(1/delta)".into(), power(iu))]);
    let lo = InequalityRecord::with_square(
        "pointwise_lower",
        grid.center(il),
        S::zero(),
        power(il),
        pair.m.get(il),
        one,
        one,
        cap,
    )
    .with_terms(vec![("m".into(), pair.m.get(il)), ("|Du|^(1/delta)".into(), power(il))]);
    Ok(PointwiseBounds {
        c_upper: up.estimated_c,
        c_lower: lo.estimated_c,
        records: vec![up, lo],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Provenance;

    fn pair(u: impl Fn(&[f64]) -> f64, m: impl Fn(&[f64]) -> f64) -> SolutionPair<f64> {
        let g = GridSpec::nodal(2, &[64, 64], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        SolutionPair {
            u: ScalarField::from_fn(g, u).unwrap(),
            m: ScalarField::from_fn(g, m).unwrap(),
            provenance: Provenance::Loaded,
            gamma: None,
            diagnostics: None,
        }
    }

    #[test]
    fn constant_density_on_flat_u_violates_identity() {
        let model = HamiltonianModel::standard(HamiltonianParams::derive(2.0, 0.0, 1.0, 0.1).unwrap());
        let r = hjb_residual(&pair(|_| 0.0, |_| 1.0), &model, 1e-10).unwrap();
        assert!(r.field.values().iter().all(|&h| (h + 1.0).abs() < 1e-15));
        assert!(r.records[0].is_failure());
        assert!(!r.records[1].is_failure());
    }

    #[test]
    fn flat_u_has_zero_transport_residual() {
        let model = HamiltonianModel::separable_gamma(4.0).unwrap();
        let p = pair(|_| 2.0, |_| 0.0);
        let family = crate::grid::bump_test_family(p.u.grid(), 3, &[0.15], 1).unwrap();
        for r in transport_residual(&p, &model, &family).unwrap() {
            assert_eq!(r.normalized, 0.0);
        }
    }

    #[test]
    fn pointwise_constants_follow_the_density_scale() {
        let params = HamiltonianParams::derive(2.0, 0.0, 1.0, 0.1).unwrap();
        let p = pair(|x| 2.0 * x[0] + x[1], |_| 2.5);
        let b = pointwise_bound_constant(&p, &params, 1e6).unwrap();
        // |Du|² = 5: upper 2.5/6, lower root of C² + 2.5C − 5
        assert!((b.c_upper - 2.5 / 6.0).abs() < 1e-12);
        assert!((b.c_lower - (-2.5 + (6.25f64 + 20.0).sqrt()) / 2.0).abs() < 1e-12);
        let doubled = pair(|x| 2.0 * x[0] + x[1], |_| 5.0);
        let b2 = pointwise_bound_constant(&doubled, &params, 1e6).unwrap();
        assert!((b2.c_upper / b.c_upper - 2.0).abs() < 1e-12);
    }
}
