//! Preconditioned nonlinear conjugate gradients (Polak–Ribière+) with a
//! derivative-bracketing line search and an Armijo acceptance test, so the
//! energy never increases.

use super::precond::LaplacePreconditioner;
use super::stencil::Stencil;
use super::{recover_density, Provenance, Result, SolutionPair, SolverDiagnostics, SolverError, VariationalProblem};
use crate::grid::ScalarField;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions<S> {
    pub max_iters: usize,
    /// Tolerance on `sup |∂E/∂u_i| / h^d` over interior nodes.
    pub grad_tol: S,
    /// Sufficient-decrease constant.
    pub armijo: S,
    /// Line search stops once `|φ′(t)| ≤ curvature·|φ′(0)|`.
    pub curvature: S,
}

impl<S: Real> Default for MinimizeOptions<S> {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: S::lit(1e-9),
            armijo: S::lit(1e-4),
            curvature: S::lit(0.1),
        }
    }
}

struct Workspace<'a, S> {
    problem: &'a VariationalProblem<S>,
    stencil: Stencil<S>,
    interior: Vec<bool>,
}

impl<S: Real> Workspace<'_, S> {
    fn gradient(&self, u: &[S]) -> Vec<S> {
        let mut g = self.stencil.gradient(u);
        for (v, &inside) in g.iter_mut().zip(&self.interior) {
            if !inside {
                *v = S::zero();
            }
        }
        g
    }

    fn sup_norm(&self, g: &[S]) -> S {
        let hd = self.problem.grid().cell_volume();
        g.iter().fold(S::zero(), |acc, v| acc.max(v.abs())) / hd
    }
}

fn axpy<S: Real>(x: &[S], t: S, d: &[S]) -> Vec<S> {
    x.iter().zip(d).map(|(&a, &b)| a + t * b).collect()
}

/// Discrete harmonic function with the problem's boundary data.
pub fn harmonic_extension<S: Real>(problem: &VariationalProblem<S>) -> Result<ScalarField<S>> {
    let grid = *problem.grid();
    let mut u = problem.with_boundary(&ScalarField::zeros(grid))?.into_values();
    let quad = Stencil::new(&grid, S::lit(0.5), S::lit(2.0), S::zero());
    let g = quad.gradient(&u);
    let z = LaplacePreconditioner::new(&grid).apply(&grid, &g);
    for (i, v) in u.iter_mut().enumerate() {
        if !grid.is_boundary(i) {
            *v = -z[i];
        }
    }
    Ok(ScalarField::new(grid, u)?)
}

enum Step<S> {
    Accepted { t: S, x: Vec<S>, g: Vec<S>, de: S },
    Stalled,
}

fn line_search<S: Real>(ws: &Workspace<'_, S>, x: &[S], d: &[S], gd: S, t0: S, opts: &MinimizeOptions<S>) -> Step<S> {
    let two = S::lit(2.0);
    let target = opts.curvature * gd.abs();
    let (mut lo, mut dlo) = (S::zero(), gd);
    let mut hi: Option<(S, S)> = None;
    let mut t = t0;
    let mut last_side = 0i8;
    let mut best: Option<(S, Vec<S>, Vec<S>, S)> = None;
    for _ in 0..80 {
        let xt = axpy(x, t, d);
        let gt = ws.gradient(&xt);
        let dt = dot(&gt, d);
        if !dt.is_finite() {
            hi = Some((t, S::infinity()));
            t = lo + (t - lo) / S::lit(4.0);
            continue;
        }
        if dt.abs() <= target {
            best = Some((t, xt, gt, dt));
            break;
        }
        if dt < S::zero() {
            lo = t;
            dlo = dt;
            if last_side == -1 {
                if let Some((_, dh)) = hi.as_mut() {
                    *dh = *dh / two;
                }
            }
            last_side = -1;
        } else {
            if last_side == 1 {
                dlo = dlo / two;
            }
            hi = Some((t, dt));
            last_side = 1;
        }
        t = match hi {
            None => t * two,
            Some((th, dh)) => {
                let w = th - lo;
                let s = if dh.is_finite() { lo - dlo * w / (dh - dlo) } else { lo + w / two };
                let guard = w / S::lit(100.0);
                s.max(lo + guard).min(th - guard)
            }
        };
        if let Some((th, _)) = hi {
            if th - lo <= S::epsilon() * (S::one() + lo.abs()) {
                break;
            }
        }
    }
    let (mut t, mut xt, mut gt, mut dt) = match best {
        Some(b) => b,
        None => {
            // no strong-curvature point found; fall back to the last point
            // known to lie before the minimum
            if lo == S::zero() {
                return Step::Stalled;
            }
            let xt = axpy(x, lo, d);
            let gt = ws.gradient(&xt);
            let dt = dot(&gt, d);
            (lo, xt, gt, dt)
        }
    };
    for _ in 0..60 {
        // The energy is convex, so φ(t) − φ(0) ≤ t·φ′(t): a non-positive
        // end slope certifies descent even when the energy difference is
        // below round-off.
        let de = ws.stencil.energy_difference(x, &xt);
        if de <= opts.armijo * t * gd || dt <= S::zero() {
            return Step::Accepted { t, x: xt, g: gt, de };
        }
        if lo > S::zero() && lo < t {
            t = lo;
        } else {
            t = t / two;
        }
        xt = axpy(x, t, d);
        gt = ws.gradient(&xt);
        dt = dot(&gt, d);
    }
    Step::Stalled
}

/// Minimises the discrete energy starting from `init`, which must carry
/// the boundary data exactly.
pub fn minimize<S: Real>(
    problem: &VariationalProblem<S>,
    init: &ScalarField<S>,
    opts: &MinimizeOptions<S>,
) -> Result<SolutionPair<S>> {
    problem.check_boundary(init)?;
    let grid = *problem.grid();
    let (a, r) = problem.power_law();
    let mu = if r < S::lit(2.0) {
        S::lit(1e-8) * grid.diameter() / grid.max_spacing()
    } else {
        S::zero()
    };
    let ws = Workspace {
        problem,
        stencil: Stencil::new(&grid, a, r, mu),
        interior: (0..grid.len()).map(|i| !grid.is_boundary(i)).collect(),
    };
    let precond = LaplacePreconditioner::new(&grid);

    let mut x = init.values().to_vec();
    let mut e = ws.stencil.energy(&x);
    if !e.is_finite() {
        return Err(SolverError::DomainError("initial energy is not finite".into()));
    }
    let mut trace = vec![e];
    let mut g = ws.gradient(&x);
    let mut gnorm = ws.sup_norm(&g);
    let mut z = precond.apply(&grid, &g);
    let mut gz = dot(&g, &z);
    let mut d: Vec<S> = z.iter().map(|&v| -v).collect();
    let mut prev: Option<(S, S)> = None;
    let mut iterations = 0;
    let mut converged = gnorm <= opts.grad_tol;

    while !converged && iterations < opts.max_iters {
        let mut gd = dot(&g, &d);
        if !(gd < S::zero()) {
            d = z.iter().map(|&v| -v).collect();
            gd = -gz;
        }
        let t0 = match prev {
            Some((t, gd_prev)) => t * gd_prev / gd,
            None => S::one(),
        };
        let t0 = if t0.is_finite() && t0 > S::zero() { t0 } else { S::one() };
        match line_search(&ws, &x, &d, gd, t0, opts) {
            Step::Stalled => break,
            Step::Accepted { t, x: xn, g: gn, de } => {
                iterations += 1;
                x = xn;
                e = e + de.min(S::zero());
                trace.push(e);
                prev = Some((t, gd));
                let zn = precond.apply(&grid, &gn);
                let gzn = dot(&gn, &zn);
                let beta = ((gzn - dot(&gn, &z)) / gz).max(S::zero());
                let beta = if beta.is_finite() { beta } else { S::zero() };
                d = zn.iter().zip(&d).map(|(&zi, &di)| -zi + beta * di).collect();
                g = gn;
                z = zn;
                gz = gzn;
                gnorm = ws.sup_norm(&g);
                converged = gnorm <= opts.grad_tol;
            }
        }
    }

    let u = ScalarField::new(grid, x)?;
    let m = recover_density(problem, &u)?;
    let pair = SolutionPair {
        u,
        m,
        provenance: Provenance::Solved,
        gamma: problem.gamma(),
        diagnostics: Some(SolverDiagnostics {
            iterations,
            grad_norm: gnorm,
            converged,
            energy_trace: trace,
        }),
    };
    if converged {
        Ok(pair)
    } else {
        Err(SolverError::NonConvergence {
            iterations,
            grad_norm: gnorm.as_f64(),
            best: Box::new(pair.to_f64()),
        })
    }
}
