//! Discrete energy `Σ W(∇u)` for `W(g) = A(|g|² + μ²)^{r/2}`.
//!
//! In 2-D each square of four neighbouring cell centres is split into four
//! corner triangles (the average of both diagonal triangulations), each with
//! weight `h₀h₁/4` and the gradient formed by its two edge differences. In
//! 1-D the energy is `Σ h·W(Δu/h)` over edges. Row sums run in parallel and
//! are reduced in a fixed order.

use rayon::prelude::*;

use crate::grid::GridSpec;
use crate::scalar::Real;

pub(crate) struct Stencil<S> {
    dim: usize,
    n0: usize,
    n1: usize,
    h0: S,
    h1: S,
    a: S,
    r: S,
    mu2: S,
}

impl<S: Real> Stencil<S> {
    pub(crate) fn new(grid: &GridSpec<S>, a: S, r: S, mu: S) -> Self {
        let dim = grid.dim();
        let n0 = grid.shape()[0];
        let (n1, h1) = if dim == 2 {
            (grid.shape()[1], grid.spacing()[1])
        } else {
            (1, S::one())
        };
        Self {
            dim,
            n0,
            n1,
            h0: grid.spacing()[0],
            h1,
            a,
            r,
            mu2: mu * mu,
        }
    }

    #[inline]
    fn w(&self, g0: S, g1: S) -> S {
        self.a * (g0 * g0 + g1 * g1 + self.mu2).powf(self.r / S::lit(2.0))
    }

    /// `W′(g)/|g|`-style factor: `∇W(g) = factor · g`.
    #[inline]
    fn dw_factor(&self, g0: S, g1: S) -> S {
        let s = g0 * g0 + g1 * g1 + self.mu2;
        if s == S::zero() {
            return S::zero();
        }
        self.a * self.r * s.powf(self.r / S::lit(2.0) - S::one())
    }

    fn square_energy(&self, u: &[S], i: usize, j: usize) -> S {
        let k = i * self.n1 + j;
        let (a, b, c, d) = (u[k], u[k + self.n1], u[k + 1], u[k + self.n1 + 1]);
        let e0l = (b - a) / self.h0;
        let e0h = (d - c) / self.h0;
        let e1l = (c - a) / self.h1;
        let e1r = (d - b) / self.h1;
        let wt = self.h0 * self.h1 / S::lit(4.0);
        wt * (self.w(e0l, e1l) + self.w(e0l, e1r) + self.w(e0h, e1l) + self.w(e0h, e1r))
    }

    fn edge_energy(&self, u: &[S], i: usize) -> S {
        self.h0 * self.w((u[i + 1] - u[i]) / self.h0, S::zero())
    }

    fn row_energy(&self, u: &[S], i: usize) -> S {
        if self.dim == 1 {
            self.edge_energy(u, i)
        } else {
            (0..self.n1 - 1).map(|j| self.square_energy(u, i, j)).sum()
        }
    }

    pub(crate) fn energy(&self, u: &[S]) -> S {
        let rows: Vec<S> = (0..self.n0 - 1)
            .into_par_iter()
            .map(|i| self.row_energy(u, i))
            .collect();
        rows.into_iter().sum()
    }

    /// `E(v) − E(u)` summed element by element, which keeps the difference
    /// accurate when both energies are large.
    pub(crate) fn energy_difference(&self, u: &[S], v: &[S]) -> S {
        let rows: Vec<S> = (0..self.n0 - 1)
            .into_par_iter()
            .map(|i| {
                if self.dim == 1 {
                    self.edge_energy(v, i) - self.edge_energy(u, i)
                } else {
                    (0..self.n1 - 1)
                        .map(|j| self.square_energy(v, i, j) - self.square_energy(u, i, j))
                        .sum()
                }
            })
            .collect();
        rows.into_iter().sum()
    }

    /// Contributions of square `(i, j)` to its corners `[a, b, c, d]` =
    /// `[(i,j), (i+1,j), (i,j+1), (i+1,j+1)]`.
    fn square_gradient(&self, u: &[S], i: usize, j: usize) -> [S; 4] {
        let k = i * self.n1 + j;
        let (a, b, c, d) = (u[k], u[k + self.n1], u[k + 1], u[k + self.n1 + 1]);
        let e0l = (b - a) / self.h0;
        let e0h = (d - c) / self.h0;
        let e1l = (c - a) / self.h1;
        let e1r = (d - b) / self.h1;
        let wt = self.h0 * self.h1 / S::lit(4.0);
        let mut out = [S::zero(); 4];
        let mut corner = |g0: S, g1: S, x0: (usize, usize), x1: (usize, usize)| {
            // x0: (minus, plus) slots of the axis-0 edge, x1 likewise for axis 1
            let f = wt * self.dw_factor(g0, g1);
            let p0 = f * g0 / self.h0;
            let p1 = f * g1 / self.h1;
            out[x0.0] = out[x0.0] - p0;
            out[x0.1] = out[x0.1] + p0;
            out[x1.0] = out[x1.0] - p1;
            out[x1.1] = out[x1.1] + p1;
        };
        corner(e0l, e1l, (0, 1), (0, 2));
        corner(e0l, e1r, (0, 1), (1, 3));
        corner(e0h, e1l, (2, 3), (0, 2));
        corner(e0h, e1r, (2, 3), (1, 3));
        out
    }

    /// Energy gradient with respect to every nodal value (boundary included).
    pub(crate) fn gradient(&self, u: &[S]) -> Vec<S> {
        if self.dim == 1 {
            let flux: Vec<S> = (0..self.n0 - 1)
                .map(|i| {
                    let e = (u[i + 1] - u[i]) / self.h0;
                    self.dw_factor(e, S::zero()) * e
                })
                .collect();
            return (0..self.n0)
                .map(|i| {
                    let mut g = S::zero();
                    if i > 0 {
                        g = g + flux[i - 1];
                    }
                    if i + 1 < self.n0 {
                        g = g - flux[i];
                    }
                    g
                })
                .collect();
        }
        let (n0, n1) = (self.n0, self.n1);
        let m1 = n1 - 1;
        let squares: Vec<[S; 4]> = (0..n0 - 1)
            .into_par_iter()
            .flat_map_iter(|i| (0..m1).map(move |j| (i, j)))
            .map(|(i, j)| self.square_gradient(u, i, j))
            .collect();
        (0..n0 * n1)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n1, k % n1);
                let mut g = S::zero();
                if i + 1 < n0 && j + 1 < n1 {
                    g = g + squares[i * m1 + j][0];
                }
                if i > 0 && j + 1 < n1 {
                    g = g + squares[(i - 1) * m1 + j][1];
                }
                if i + 1 < n0 && j > 0 {
                    g = g + squares[i * m1 + j - 1][2];
                }
                if i > 0 && j > 0 {
                    g = g + squares[(i - 1) * m1 + j - 1][3];
                }
                g
            })
            .collect()
    }
}
