//! Variational solver for separable MFG systems.
//!
//! Minimises `E(u) = ∫ G(H₀(Du))` over grid functions with Dirichlet data,
//! recovers the density `m = G′(H₀(Du))` and provides the radial
//! γ-harmonic oracle.

mod minimize;
mod precond;
mod stencil;

use thiserror::Error;

use crate::grid::{gradient, GridError, GridSpec, ScalarField};
use crate::hamiltonian::{Coefficient, HamiltonianError, HamiltonianModel, HamiltonianParams};
use crate::scalar::{norm, Real};

pub use minimize::{harmonic_extension, minimize, MinimizeOptions};
pub use precond::LaplacePreconditioner;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("value outside the domain of G: {0}")]
    DomainError(String),
    #[error("initial guess violates the boundary data at cell {index}")]
    BoundaryMismatch { index: usize },
    #[error("origin lies inside the open domain")]
    OriginInDomain,
    #[error("no convergence after {iterations} iterations (gradient {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        best: Box<SolutionPair<f64>>,
    },
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// `H₀(p) = coeff · |p|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumPart<S> {
    pub coeff: S,
    pub exponent: S,
}

/// `G(z) = z^q / q` on `z ≥ 0`, so `G′(z) = z^{q−1}`; `q = 2` is the
/// quadratic case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDensity<S> {
    pub q: S,
}

impl<S: Real> EnergyDensity<S> {
    pub fn quadratic() -> Self {
        Self { q: S::lit(2.0) }
    }

    pub fn value(&self, z: S) -> S {
        z.powf(self.q) / self.q
    }

    pub fn derivative(&self, z: S) -> S {
        z.powf(self.q - S::one())
    }

    pub fn derivative_inverse(&self, m: S) -> S {
        m.powf(S::one() / (self.q - S::one()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem<S> {
    grid: GridSpec<S>,
    h0: MomentumPart<S>,
    g: EnergyDensity<S>,
    /// Full-grid field; only the boundary layer is read.
    boundary: ScalarField<S>,
    gamma_laplace: Option<S>,
}

impl<S: Real> VariationalProblem<S> {
    pub fn new(
        grid: GridSpec<S>,
        h0: MomentumPart<S>,
        g: EnergyDensity<S>,
        boundary: impl Fn(&[S]) -> S,
    ) -> Result<Self> {
        if !(h0.coeff > S::zero() && h0.exponent > S::zero()) {
            return Err(SolverError::InvalidProblem("H0 needs positive coefficient and exponent".into()));
        }
        if !(g.q > S::one()) {
            return Err(SolverError::InvalidProblem("G(z) = z^q/q needs q > 1".into()));
        }
        if !(h0.exponent * g.q > S::one()) {
            return Err(SolverError::InvalidProblem(
                "energy exponent must exceed one for a convex coercive problem".into(),
            ));
        }
        grid.check_min_cells(3)?;
        let boundary = ScalarField::from_fn(grid, |x| {
            let v = boundary(x);
            if v.is_finite() {
                v
            } else {
                S::zero()
            }
        })?;
        Ok(Self {
            grid,
            h0,
            g,
            boundary,
            gamma_laplace: None,
        })
    }

    /// `H₀ = (2/γ)|p|^{γ/2}`, `G(z) = z²/2`: the Euler–Lagrange equation
    /// is the γ-Laplacian.
    pub fn gamma_laplace(grid: GridSpec<S>, gamma: S, boundary: impl Fn(&[S]) -> S) -> Result<Self> {
        if !(gamma > S::one()) {
            return Err(SolverError::InvalidProblem(format!("gamma must exceed 1, got {gamma}")));
        }
        let two = S::lit(2.0);
        let mut p = Self::new(
            grid,
            MomentumPart {
                coeff: two / gamma,
                exponent: gamma / two,
            },
            EnergyDensity::quadratic(),
            boundary,
        )?;
        p.gamma_laplace = Some(gamma);
        Ok(p)
    }

    pub fn grid(&self) -> &GridSpec<S> {
        &self.grid
    }
    pub fn momentum_part(&self) -> MomentumPart<S> {
        self.h0
    }
    pub fn energy_density(&self) -> EnergyDensity<S> {
        self.g
    }
    pub fn boundary(&self) -> &ScalarField<S> {
        &self.boundary
    }
    pub fn gamma(&self) -> Option<S> {
        self.gamma_laplace
    }

    /// `W(p) = G(H₀(p)) = A|p|^r`: returns `(A, r)`.
    pub(crate) fn power_law(&self) -> (S, S) {
        let q = self.g.q;
        (self.h0.coeff.powf(q) / q, self.h0.exponent * q)
    }

    pub fn h0(&self, p: &[S]) -> S {
        self.h0.coeff * norm(p).powf(self.h0.exponent)
    }

    /// Field equal to the boundary data on the boundary layer and to
    /// `interior` elsewhere.
    pub fn with_boundary(&self, interior: &ScalarField<S>) -> Result<ScalarField<S>> {
        if interior.grid() != &self.grid {
            return Err(GridError::GridMismatch.into());
        }
        let values = (0..self.grid.len())
            .map(|i| {
                if self.grid.is_boundary(i) {
                    self.boundary.get(i)
                } else {
                    interior.get(i)
                }
            })
            .collect();
        Ok(ScalarField::new(self.grid, values)?)
    }

    pub(crate) fn check_boundary(&self, u: &ScalarField<S>) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(GridError::GridMismatch.into());
        }
        for i in 0..self.grid.len() {
            if self.grid.is_boundary(i) && u.get(i) != self.boundary.get(i) {
                return Err(SolverError::BoundaryMismatch { index: i });
            }
        }
        Ok(())
    }
}

/// Where a solution pair came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Solved,
    Oracle,
    Loaded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics<S> {
    pub iterations: usize,
    pub grad_norm: S,
    pub converged: bool,
    /// Energy after every accepted iteration, starting with the initial guess.
    pub energy_trace: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair<S> {
    pub u: ScalarField<S>,
    pub m: ScalarField<S>,
    pub provenance: Provenance,
    /// γ of the γ-Laplace problem the pair claims to solve, when known.
    pub gamma: Option<S>,
    pub diagnostics: Option<SolverDiagnostics<S>>,
}

impl<S: Real> SolutionPair<S> {
    pub fn to_f64(&self) -> SolutionPair<f64> {
        let conv = |f: &ScalarField<S>| {
            ScalarField::new(
                f.grid().to_f64(),
                f.values().iter().map(|v| v.as_f64()).collect(),
            )
            .expect("finite field converts")
        };
        SolutionPair {
            u: conv(&self.u),
            m: conv(&self.m),
            provenance: self.provenance.clone(),
            gamma: self.gamma.map(|g| g.as_f64()),
            diagnostics: self.diagnostics.as_ref().map(|d| SolverDiagnostics {
                iterations: d.iterations,
                grad_norm: d.grad_norm.as_f64(),
                converged: d.converged,
                energy_trace: d.energy_trace.iter().map(|e| e.as_f64()).collect(),
            }),
        }
    }
}

/// Discrete energy of `u` (see [`stencil`] for the quadrature).
pub fn energy<S: Real>(problem: &VariationalProblem<S>, u: &ScalarField<S>) -> Result<S> {
    if u.grid() != problem.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let (a, r) = problem.power_law();
    Ok(stencil::Stencil::new(problem.grid(), a, r, S::zero()).energy(u.values()))
}

/// `m = G′(H₀(Du))` with `Du` from [`gradient`]; negative round-off is
/// clamped to zero.
pub fn recover_density<S: Real>(problem: &VariationalProblem<S>, u: &ScalarField<S>) -> Result<ScalarField<S>> {
    let du = gradient(u)?;
    let values = (0..u.grid().len())
        .map(|i| {
            let p = du.at(i);
            problem.g.derivative(problem.h0(&p[..u.grid().dim()])).max(S::zero())
        })
        .collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SolverError::DomainError(format!("G'(H0(Du)) is not finite at cell {i}")));
    }
    Ok(ScalarField::new(*u.grid(), values)?)
}

/// `u = |x|^κ`, `κ = (γ−d)/(γ−1)`, with `m` from [`recover_density`] of
/// the γ-Laplace problem. The origin may sit on the boundary but not
/// inside the open domain.
pub fn oracle_radial<S: Real>(gamma: S, grid: &GridSpec<S>) -> Result<SolutionPair<S>> {
    let d = S::from_usize_lossy(grid.dim());
    if !(gamma > S::one()) || gamma == d {
        return Err(SolverError::InvalidProblem(format!(
            "radial oracle needs gamma > 1 and gamma != d (gamma = {gamma})"
        )));
    }
    let inside = (0..grid.dim()).all(|a| {
        let lo = grid.center(0)[a];
        let hi = grid.center(grid.len() - 1)[a];
        lo < S::zero() && S::zero() < hi
    });
    if inside {
        return Err(SolverError::OriginInDomain);
    }
    let kappa = radial_exponent(gamma, grid.dim());
    let radial = |x: &[S]| norm(x).powf(kappa);
    let problem = VariationalProblem::gamma_laplace(*grid, gamma, radial)?;
    let u = ScalarField::from_fn(*grid, radial)?;
    let m = recover_density(&problem, &u)?;
    Ok(SolutionPair {
        u,
        m,
        provenance: Provenance::Oracle,
        gamma: Some(gamma),
        diagnostics: None,
    })
}

/// `κ = (γ−d)/(γ−1)`.
pub fn radial_exponent<S: Real>(gamma: S, dim: usize) -> S {
    (gamma - S::from_usize_lossy(dim)) / (gamma - S::one())
}

/// `H(x,p,m) = H₀(p) − (G′)⁻¹(m)` as a full model: exponents
/// `(α, τ, β) = (exponent, 0, 1/(q−1))` and `ε = (β−δ)/2`.
pub fn hamiltonian_of_problem<S: Real>(problem: &VariationalProblem<S>) -> Result<HamiltonianModel<S>> {
    if let Some(gamma) = problem.gamma_laplace {
        return Ok(HamiltonianModel::separable_gamma(gamma)?);
    }
    let alpha = problem.h0.exponent;
    let beta = S::one() / (problem.g.q - S::one());
    if !(alpha > S::one()) {
        return Err(HamiltonianError::ParamConstraintViolation(format!("alpha > 1 (alpha = {alpha})")).into());
    }
    let delta = beta / alpha;
    let params = HamiltonianParams::derive(alpha, S::zero(), beta, (beta - delta) / S::lit(2.0))?;
    Ok(HamiltonianModel::standard(params)
        .with_coefficients(Coefficient::Constant(problem.h0.coeff), Coefficient::Constant(S::one()))?)
}
