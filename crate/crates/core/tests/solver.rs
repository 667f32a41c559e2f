use std::time::Instant;

use mfg_lab::grid::{GridSpec, ScalarField};
use mfg_lab::scalar::norm;
use mfg_lab::solver::{
    energy, harmonic_extension, minimize, oracle_radial, radial_exponent, MinimizeOptions, SolverError,
    VariationalProblem,
};

fn unit_square(cells_per_side: usize) -> GridSpec<f64> {
    let n = cells_per_side + 1;
    GridSpec::nodal(2, &[n, n], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

struct RadialRun {
    sup: f64,
    /// Sup error over nodes with |x| ≥ 1/4.
    far: f64,
    iterations: usize,
}

fn radial_run(cells: usize) -> RadialRun {
    let grid = unit_square(cells);
    let kappa = radial_exponent(4.0, 2);
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| norm(x).powf(kappa)).unwrap();
    let init = harmonic_extension(&problem).unwrap();
    let pair = minimize(&problem, &init, &MinimizeOptions::default()).unwrap();
    let exact = oracle_radial(4.0, &grid).unwrap();
    let err = |keep: &dyn Fn(usize) -> bool| {
        (0..grid.len())
            .filter(|&i| !grid.is_boundary(i) && keep(i))
            .map(|i| (pair.u.get(i) - exact.u.get(i)).abs())
            .fold(0.0, f64::max)
    };
    RadialRun {
        sup: err(&|_| true),
        far: err(&|i| norm(&grid.center(i)) >= 0.25),
        iterations: pair.diagnostics.unwrap().iterations,
    }
}

#[test]
fn one_dimensional_affine_solution() {
    let start = Instant::now();
    let grid = GridSpec::<f64>::nodal(1, &[129], &[0.0], &[1.0]).unwrap();
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| x[0]).unwrap();
    // start away from the harmonic guess, which is already exact here
    let init = problem
        .with_boundary(&ScalarField::from_fn(grid, |x| x[0] * x[0]).unwrap())
        .unwrap();
    let pair = minimize(&problem, &init, &MinimizeOptions::default()).unwrap();
    for i in 0..grid.len() {
        let x = grid.center(i)[0];
        assert!((pair.u.get(i) - x).abs() <= 1e-6);
        assert!((pair.m.get(i) - 0.5).abs() <= 1e-6);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn energy_trace_is_monotone() {
    let grid = unit_square(16);
    let problem = VariationalProblem::gamma_laplace(grid, 3.0, |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
    let init = problem.with_boundary(&ScalarField::zeros(grid)).unwrap();
    let pair = minimize(&problem, &init, &MinimizeOptions::default()).unwrap();
    let diag = pair.diagnostics.unwrap();
    assert!(diag.converged && diag.grad_norm <= 1e-9);
    for w in diag.energy_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(pair.m.values().iter().all(|&v| v >= 0.0));
    for i in 0..grid.len() {
        if grid.is_boundary(i) {
            assert_eq!(pair.u.get(i), problem.boundary().get(i));
        }
    }
    let final_energy = energy(&problem, &pair.u).unwrap();
    assert!(final_energy <= energy(&problem, &init).unwrap());
}

#[test]
fn converged_start_takes_no_iterations() {
    let grid = unit_square(16);
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| x[0] - 2.0 * x[1]).unwrap();
    let init = ScalarField::from_fn(grid, |x| x[0] - 2.0 * x[1]).unwrap();
    let pair = minimize(&problem, &init, &MinimizeOptions::default()).unwrap();
    assert_eq!(pair.diagnostics.unwrap().iterations, 0);
}

#[test]
fn sub_quadratic_energy_converges() {
    let grid = unit_square(16);
    let problem = VariationalProblem::gamma_laplace(grid, 1.5, |x| x[0] * x[1]).unwrap();
    let init = harmonic_extension(&problem).unwrap();
    let opts = MinimizeOptions {
        grad_tol: 1e-7,
        ..MinimizeOptions::default()
    };
    let pair = minimize(&problem, &init, &opts).unwrap();
    assert!(pair.diagnostics.unwrap().converged);
}

#[test]
fn budget_exhaustion_returns_best_iterate() {
    let grid = unit_square(32);
    let kappa = radial_exponent(4.0, 2);
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| norm(x).powf(kappa)).unwrap();
    let init = harmonic_extension(&problem).unwrap();
    let opts = MinimizeOptions {
        max_iters: 2,
        ..MinimizeOptions::default()
    };
    match minimize(&problem, &init, &opts) {
        Err(SolverError::NonConvergence { iterations, best, .. }) => {
            assert_eq!(iterations, 2);
            let d = best.diagnostics.unwrap();
            assert!(!d.converged);
            assert!(d.energy_trace[2] <= d.energy_trace[0]);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn boundary_mismatch_is_rejected() {
    let grid = unit_square(8);
    let problem = VariationalProblem::gamma_laplace(grid, 4.0, |x| x[0]).unwrap();
    let err = minimize(&problem, &ScalarField::zeros(grid), &MinimizeOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::BoundaryMismatch { .. }));
}

#[test]
fn radial_oracle_refinement() {
    let start = Instant::now();
    let levels = [16, 32, 64, 128];
    let runs: Vec<RadialRun> = levels.iter().map(|&n| radial_run(n)).collect();
    for (n, r) in levels.iter().zip(&runs) {
        eprintln!("h=1/{n}: sup {:.3e}, |x|>=1/4 {:.3e}, {} iterations", r.sup, r.far, r.iterations);
    }
    assert!(runs[3].sup <= 5e-3, "sup error {}", runs[3].sup);
    let order = |a: f64, b: f64| (a / b).log2() / 3.0;
    // the worst node sits next to the corner, where u(hx) = h^κ u(x) makes
    // the error scale exactly like h^κ
    let sup_order = order(runs[0].sup, runs[3].sup);
    assert!((sup_order - 2.0 / 3.0).abs() < 0.05, "sup order {sup_order}");
    let far_order = order(runs[0].far, runs[3].far);
    assert!(far_order >= 0.9, "order away from the corner {far_order}");
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
