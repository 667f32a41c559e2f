use std::sync::Arc;

use mfg_lab::assumptions::{
    check_a1, check_a2, check_a3, check_lemma_envelopes, check_lions, run_all, verify_with_constant,
    SampleLattice,
};
use mfg_lab::hamiltonian::{
    Coefficient, CustomDpH, CustomH, DensityMap, HamiltonianModel, HamiltonianParams, LowerOrderTerm,
};

const TOL: f64 = 0.05;

fn params(a: f64, t: f64, b: f64) -> HamiltonianParams<f64> {
    HamiltonianParams::derive(a, t, b, 0.1).unwrap()
}

fn standard(a: f64, t: f64, b: f64) -> HamiltonianModel<f64> {
    HamiltonianModel::standard(params(a, t, b))
}

fn lattice() -> SampleLattice<f64> {
    SampleLattice::default_for(2)
}

fn custom(h: CustomH<f64>, g: CustomDpH<f64>) -> HamiltonianModel<f64> {
    HamiltonianModel::custom(params(2.0, 0.0, 1.0), 2, h, g).unwrap()
}

#[test]
fn quadratic_model_passes_everything() {
    let report = run_all(&standard(2.0, 0.0, 1.0), &lattice(), TOL).unwrap();
    for r in &report.records {
        assert!(r.pass, "{} failed: {}", r.check_id, r.note);
        assert!(r.estimated_c.is_finite());
    }
    let a3 = report.record("A.3").unwrap();
    assert_eq!(a3.estimated_c, 1.0);
    assert!(report.lions);
}

#[test]
fn congestion_model_growth_constant_is_at_most_two() {
    let rec = check_a1(&standard(2.0, 0.5, 2.0), &lattice(), TOL).unwrap();
    assert!(rec.pass, "{}", rec.note);
    // the supremum 2 is approached only as |p| -> inf
    assert!(rec.estimated_c <= 2.0 && rec.estimated_c > 1.7);
    assert!((rec.fitted_value("slope_p").unwrap() - 1.0).abs() < 1e-6);
    assert!((rec.fitted_value("slope_m").unwrap() + 0.5).abs() < 1e-6);
}

#[test]
fn constants_are_stable_under_refinement() {
    let model = standard(2.0, 0.5, 2.0);
    let coarse = run_all(&model, &lattice(), TOL).unwrap();
    let fine = run_all(&model, &lattice().refined(), TOL).unwrap();
    assert!(coarse.pass() && fine.pass());
    for (a, b) in coarse.records.iter().zip(&fine.records) {
        let change = (b.estimated_c - a.estimated_c).abs() / a.estimated_c;
        assert!(change < 0.1, "{}: {} -> {}", a.check_id, a.estimated_c, b.estimated_c);
    }
}

#[test]
fn estimated_constants_survive_doubling() {
    let lat = lattice();
    for model in [standard(2.0, 0.5, 2.0), standard(3.0, 0.2, 1.5), HamiltonianModel::separable_gamma(4.0).unwrap()] {
        let report = run_all(&model, &lat, TOL).unwrap();
        assert!(report.pass());
        for id in ["A.1", "A.2", "A.3", "envelopes"] {
            let c = report.record(id).unwrap().estimated_c;
            assert!(verify_with_constant(&model, &lat, id, c).unwrap(), "{id} at C");
            assert!(verify_with_constant(&model, &lat, id, 2.0 * c).unwrap(), "{id} at 2C");
        }
    }
}

#[test]
fn too_small_constant_is_detected() {
    let model = standard(2.0, 0.5, 2.0);
    assert!(!verify_with_constant(&model, &lattice(), "A.1", 0.5).unwrap());
    assert!(verify_with_constant(&model, &lattice(), "bogus", 1.0).is_err());
}

#[test]
fn gradient_growing_in_density_fails_growth_check() {
    let h: CustomH<f64> = Arc::new(|_, p, m| 0.5 * m * (p[0] * p[0] + p[1] * p[1]) - m);
    let g: CustomDpH<f64> = Arc::new(|_, p, m| [m * p[0], m * p[1]]);
    let lat = lattice();
    let rec = check_a1(&custom(h, g), &lat, TOL).unwrap();
    assert!(!rec.pass);
    assert!(rec.estimated_c.is_infinite());
    let w = rec.witness.unwrap();
    assert_eq!(w.m, *lat.m_values().last().unwrap());
}

#[test]
fn wrong_sign_gradient_fails_coercivity() {
    let h: CustomH<f64> = Arc::new(|_, p, m| -0.5 * (p[0] * p[0] + p[1] * p[1]) - m);
    let g: CustomDpH<f64> = Arc::new(|_, p, _| [-p[0], -p[1]]);
    let rec = check_a2(&custom(h, g), &lattice(), TOL).unwrap();
    assert!(!rec.pass);
}

#[test]
fn flipped_density_sign_fails_zero_momentum_and_envelopes() {
    let h: CustomH<f64> = Arc::new(|_, p, m| p[0] * p[0] + p[1] * p[1] + m);
    let g: CustomDpH<f64> = Arc::new(|_, p, _| [2.0 * p[0], 2.0 * p[1]]);
    let model = custom(h, g);
    let a3 = check_a3(&model, &lattice(), TOL).unwrap();
    assert!(!a3.pass);
    assert!(a3.fitted_value("C_threshold").unwrap().is_infinite());
    let env = check_lemma_envelopes(&model, &lattice(), TOL).unwrap();
    assert!(!env.pass);
}

#[test]
fn separable_gamma_passes_zero_momentum_check() {
    let model = HamiltonianModel::separable_gamma(4.0).unwrap();
    let rec = check_a3(&model, &lattice(), TOL).unwrap();
    assert!(rec.pass, "{}", rec.note);
}

#[test]
fn bounded_potential_keeps_model_admissible() {
    let model = standard(2.0, 0.5, 2.0)
        .with_lower_order_term(LowerOrderTerm::new(
            "potential",
            Coefficient::Function(Arc::new(|x| (3.0 * x[0]).sin())),
            DensityMap::Power { coeff: 1.0, exponent: 0.0 },
            0.0,
        ))
        .unwrap();
    let report = run_all(&model, &lattice(), TOL).unwrap();
    for r in &report.records {
        assert!(r.pass, "{} failed: {}", r.check_id, r.note);
    }
}

#[test]
fn one_dimensional_lattice() {
    let report = run_all(&standard(2.0, 0.5, 2.0), &SampleLattice::default_for(1), TOL).unwrap();
    assert!(report.pass());
}

#[test]
fn lions_is_informational() {
    let p = HamiltonianParams::derive(1.1, 0.9, 30.0, 0.1).unwrap();
    assert!(!check_lions(&p));
    let report = run_all(&HamiltonianModel::standard(p), &lattice(), TOL).unwrap();
    assert!(!report.lions);
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + report.records.len() + 1);
    assert!(text.lines().last().unwrap().starts_with("lions,"));
}
