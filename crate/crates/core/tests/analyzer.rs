use std::sync::OnceLock;

use mfg_lab::analyzer::{
    caccioppoli_check, harnack_ratio, reverse_holder_step, Branch, holder_fit, moser_sup_bound, osc_decay, pointwise_bound_constant, run_battery,
    transport_residual, write_analysis_csv, write_holder_csv, BallChain, BatteryConfig, InequalityRecord, RecordStatus,
    TruncatedPower,
};
use mfg_lab::grid::{bump_test_family, oscillation, Ball, GridSpec, ScalarField};
use mfg_lab::hamiltonian::HamiltonianModel;
use mfg_lab::scalar::norm;
use mfg_lab::solver::{
    harmonic_extension, minimize, oracle_radial, radial_exponent, MinimizeOptions, Provenance, SolutionPair,
    VariationalProblem,
};
use mfg_lab::{Grid, Pair};
use proptest::prelude::*;

fn unit_square(cells: usize) -> Grid {
    GridSpec::nodal(2, &[cells + 1, cells + 1], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

fn solve(cells: usize) -> Pair {
    let grid = unit_square(cells);
    let kappa = radial_exponent(4.0, 2);
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| norm(x).powf(kappa)).unwrap();
    let init = harmonic_extension(&problem).unwrap();
    minimize(&problem, &init, &MinimizeOptions::default()).unwrap()
}

/// Solved pairs at h = 1/32, 1/64, 1/128, computed once per test binary.
fn solved(level: usize) -> &'static Pair {
    static PAIRS: [OnceLock<Pair>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    PAIRS[level].get_or_init(|| solve(32 << level))
}

fn model() -> HamiltonianModel<f64> {
    HamiltonianModel::separable_gamma(4.0).unwrap()
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn holder_fit_recovers_radial_exponents() {
    let grid = unit_square(128);
    let chain = BallChain::fitted(&grid, &[0.0, 0.0], 0.5).unwrap();
    for kappa in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
        let u = ScalarField::from_fn(grid, |x| norm(x).powf(kappa)).unwrap();
        let fit = holder_fit(&u, &chain, 0).unwrap();
        assert!((fit.mu_hat - kappa).abs() <= 0.03 * kappa, "kappa {kappa}: {}", fit.mu_hat);
        assert!((0.0..=1.0).contains(&fit.r2));
    }
}

#[test]
fn solved_pair_holder_exponent() {
    let pair = solved(2);
    let chain = BallChain::fitted(pair.u.grid(), &[0.0, 0.0], 0.5).unwrap();
    let fit = holder_fit(&pair.u, &chain, 1).unwrap();
    assert!((0.60..=0.73).contains(&fit.mu_hat), "{}", fit.mu_hat);
    assert!(osc_decay(&pair.u, &chain).unwrap().iter().all(|s| s.mu.is_some()));
}

#[test]
fn transport_residual_refines() {
    let model = model();
    let worst: Vec<f64> = (0..3)
        .map(|level| {
            let pair = solved(level);
            let family = bump_test_family(pair.u.grid(), 5, &[0.1, 0.15, 0.2, 0.25], 0).unwrap();
            assert_eq!(family.len(), 20);
            transport_residual(pair, &model, &family)
                .unwrap()
                .iter()
                .map(|t| t.normalized)
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(worst[2] <= 1e-3, "{worst:?}");
    for w in worst.windows(2) {
        assert!(w[0] / w[1] >= 1.8, "{worst:?}");
    }
}

#[test]
fn oracle_transport_residual_order() {
    let model = model();
    let worst: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let grid = unit_square(n);
            let pair = oracle_radial(4.0, &grid).unwrap();
            let family = bump_test_family(&grid, 5, &[0.1, 0.15, 0.2, 0.25], 0).unwrap();
            let t = transport_residual(&pair, &model, &family).unwrap();
            t.iter().map(|t| t.normalized).fold(0.0, f64::max)
        })
        .collect();
    for w in worst.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{worst:?}");
    }
}

#[test]
fn pointwise_constants_are_stable() {
    let model = model();
    let at = |level| pointwise_bound_constant(solved(level), model.params(), 1e6).unwrap();
    let (coarse, fine) = (at(1), at(2));
    for (a, b) in [(coarse.c_upper, fine.c_upper), (coarse.c_lower, fine.c_lower)] {
        assert!(a.is_finite() && b.is_finite() && a > 0.0);
        assert!(rel_change(a, b) <= 0.25, "{a} vs {b}");
    }
    // m = (1/2)|Du|² exactly, so neither constant can pass its limit
    assert!(fine.c_upper <= 0.5 && fine.c_lower <= 2.0);
}

#[test]
fn power_law_violation_blows_up_under_dilation() {
    let model = model();
    let constants: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&l| {
            let grid = Grid::nodal(2, &[65, 65], &[0.0, 0.0], &[l, l]).unwrap();
            let u = ScalarField::from_fn(grid, |x| 0.5 * x[0] * x[0]).unwrap();
            let m = ScalarField::from_fn(grid, |x| x[0].powi(4)).unwrap();
            let pair = SolutionPair {
                u,
                m,
                provenance: Provenance::Loaded,
                gamma: None,
                diagnostics: None,
            };
            pointwise_bound_constant(&pair, model.params(), 1e6).unwrap().c_upper
        })
        .collect();
    assert!(constants.windows(2).all(|w| w[1] > 3.0 * w[0]), "{constants:?}");
}

#[test]
fn caccioppoli_and_moser_constants_are_stable() {
    let f = TruncatedPower::new(1.0, 0.3, 10.0);
    let center = [0.5, 0.5];
    let inner = Ball::new(&center, 0.2);
    let cacc = |level| {
        caccioppoli_check(&solved(level).u, 4.0, &inner, &inner.with_radius(0.3), &f, 1e6)
            .unwrap()
            .estimated_c
    };
    let moser = |level| moser_sup_bound(&solved(level).u, 4.0, &center, 0.1, 4.0, 1e6).unwrap();
    let (c1, c2) = (cacc(1), cacc(2));
    assert!(c1 > 0.0 && rel_change(c1, c2) <= 0.25, "{c1} vs {c2}");
    let (m1, m2) = (moser(1), moser(2));
    assert!(rel_change(m1.record.estimated_c, m2.record.estimated_c) <= 0.25);
    // each link θ_j → θ_{j+1} of the trace is a reverse-Hölder step with a
    // finite constant; the balls shrink with θ, so raw monotonicity is not
    // expected
    for w in m2.trace.windows(2) {
        let step = reverse_holder_step(&solved(2).u, 4.0, &center, 0.1, 1.0, w[0].0, Branch::Unsigned, 1e6).unwrap();
        assert!((step.lhs - w[1].1).abs() <= 1e-12 * w[1].1);
        assert_eq!(step.status, RecordStatus::Pass, "theta {}", w[0].0);
    }
}

#[test]
fn harnack_constant_is_uniform_across_scales() {
    let grid = unit_square(128);
    let oracle = oracle_radial(4.0, &grid).unwrap();
    let cs: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&r| harnack_ratio(&oracle.u, &[0.5, 0.5], r, 1e6).unwrap().estimated_c)
        .collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi.is_finite() && hi <= 2.0 * lo, "{cs:?}");
    for &r in &[0.05, 0.1, 0.2] {
        assert!(harnack_ratio(&oracle.u, &[0.5, 0.5], r, 1e6).unwrap().holds_with(hi));
    }
}

#[test]
fn battery_passes_on_solved_pairs() {
    let model = model();
    for level in [1, 2] {
        let report = run_battery(solved(level), &model, &BatteryConfig::default()).unwrap();
        let failing: Vec<_> = report.failures().map(|r| r.name.clone()).collect();
        assert!(failing.is_empty(), "level {level}: {failing:?}");
        for r in report.records.iter().filter(|r| r.status == RecordStatus::Pass) {
            assert!(r.estimated_c.is_finite(), "{}", r.name);
            assert!(r.holds_with(2.0 * r.estimated_c), "{}", r.name);
        }
        let names: Vec<&str> = report.records.iter().map(|r| r.name.as_str()).collect();
        for n in ["caccioppoli", "reverse_holder", "moser_sup", "harnack", "jn_epsilon", "holder_fit"] {
            assert!(names.contains(&n), "{n} missing");
        }
    }
}

#[test]
fn report_files_are_deterministic() {
    let model = model();
    let render = || {
        let report = run_battery(solved(0), &model, &BatteryConfig::default()).unwrap();
        let (mut a, mut h) = (Vec::new(), Vec::new());
        write_analysis_csv(&report, &mut a).unwrap();
        write_holder_csv(&report, &mut h).unwrap();
        (a, h, report.svgs())
    };
    assert_eq!(render(), render());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_hold_at_twice_their_constant(
        lhs in 0.0f64..1e6,
        unit in 1e-6f64..1e3,
        square in prop_oneof![Just(0.0), 1e-6f64..1e3],
        power in 0.5f64..8.0,
    ) {
        let r = InequalityRecord::with_square("p", [0.0; 2], 1.0, lhs, unit, square, power, f64::INFINITY);
        prop_assert_eq!(r.status, RecordStatus::Pass);
        prop_assert!(r.holds_with(r.estimated_c));
        prop_assert!(r.holds_with(2.0 * r.estimated_c));
    }

    #[test]
    fn oscillation_grows_with_the_ball(
        vals in proptest::collection::vec(-10.0f64..10.0, 33 * 33),
        cx in 0.2f64..0.8,
        cy in 0.2f64..0.8,
    ) {
        let grid = unit_square(32);
        let u = ScalarField::new(grid, vals).unwrap();
        let radii = [0.4, 0.2, 0.1, 0.05];
        let osc: Vec<f64> = radii.iter().map(|&r| oscillation(&u, &Ball::new(&[cx, cy], r)).unwrap()).collect();
        prop_assert!(osc.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn harnack_constant_of_constant_field(c in 0.0f64..100.0, r in 0.02f64..0.2) {
        let u = ScalarField::constant(unit_square(32), c);
        let rec = harnack_ratio(&u, &[0.5, 0.5], r, 1e6).unwrap();
        prop_assert!((rec.estimated_c - c / (c + r)).abs() <= 1e-12);
    }
}
