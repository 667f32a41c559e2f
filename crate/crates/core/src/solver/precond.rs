//! Dirichlet Laplacian on the interior nodes, used as the preconditioner
//! and for the harmonic initial guess.
//!
//! 2-D: `K = (h₁/h₀) T⊗I + (h₀/h₁) I⊗T` with `T = tridiag(−1, 2, −1)`,
//! inverted exactly in the discrete sine basis. 1-D: `K = T/h`, solved by
//! the Thomas algorithm.

use rayon::prelude::*;

use crate::grid::GridSpec;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct LaplacePreconditioner<S> {
    dim: usize,
    n0: usize,
    n1: usize,
    scale: [S; 2],
    sine0: Vec<S>,
    sine1: Vec<S>,
    eig0: Vec<S>,
    eig1: Vec<S>,
}

fn sine_basis<S: Real>(n: usize) -> (Vec<S>, Vec<S>) {
    let np1 = S::from_usize_lossy(n + 1);
    let c = (S::lit(2.0) / np1).sqrt();
    let mut s = vec![S::zero(); n * n];
    for j in 0..n {
        for k in 0..n {
            let arg = S::PI() * S::from_usize_lossy((j + 1) * (k + 1)) / np1;
            s[j * n + k] = c * arg.sin();
        }
    }
    let eig = (1..=n)
        .map(|k| S::lit(2.0) - S::lit(2.0) * (S::PI() * S::from_usize_lossy(k) / np1).cos())
        .collect();
    (s, eig)
}

impl<S: Real> LaplacePreconditioner<S> {
    /// Needs at least one interior node along every axis.
    pub fn new(grid: &GridSpec<S>) -> Self {
        let dim = grid.dim();
        let n0 = grid.shape()[0].saturating_sub(2);
        let h0 = grid.spacing()[0];
        if dim == 1 {
            return Self {
                dim,
                n0,
                n1: 1,
                scale: [S::one() / h0, S::zero()],
                sine0: Vec::new(),
                sine1: Vec::new(),
                eig0: Vec::new(),
                eig1: Vec::new(),
            };
        }
        let n1 = grid.shape()[1].saturating_sub(2);
        let h1 = grid.spacing()[1];
        let (sine0, eig0) = sine_basis(n0);
        let (sine1, eig1) = sine_basis(n1);
        Self {
            dim,
            n0,
            n1,
            scale: [h1 / h0, h0 / h1],
            sine0,
            sine1,
            eig0,
            eig1,
        }
    }

    /// Solves `K x = b` for interior vectors stored row-major.
    pub fn solve_interior(&self, b: &[S]) -> Vec<S> {
        if self.dim == 1 {
            return self.thomas(b);
        }
        let (n0, n1) = (self.n0, self.n1);
        // X S₁, then S₀ (·), scale by eigenvalues, and transform back
        let t = right_mul(b, &self.sine1, n0, n1);
        let mut y = left_mul(&self.sine0, &t, n0, n1);
        y.par_chunks_mut(n1).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v / (self.scale[0] * self.eig0[i] + self.scale[1] * self.eig1[j]);
            }
        });
        let t = right_mul(&y, &self.sine1, n0, n1);
        left_mul(&self.sine0, &t, n0, n1)
    }

    fn thomas(&self, b: &[S]) -> Vec<S> {
        let n = self.n0;
        let (diag, off) = (S::lit(2.0) * self.scale[0], -self.scale[0]);
        let mut c = vec![S::zero(); n];
        let mut d = vec![S::zero(); n];
        for i in 0..n {
            let prev_c = if i > 0 { c[i - 1] } else { S::zero() };
            let prev_d = if i > 0 { d[i - 1] } else { S::zero() };
            let denom = diag - off * prev_c;
            c[i] = off / denom;
            d[i] = (b[i] - off * prev_d) / denom;
        }
        let mut x = vec![S::zero(); n];
        for i in (0..n).rev() {
            x[i] = if i + 1 < n { d[i] - c[i] * x[i + 1] } else { d[i] };
        }
        x
    }

    /// Applies `K⁻¹` to the interior part of a full-grid vector; boundary
    /// entries of the result are zero.
    pub fn apply(&self, grid: &GridSpec<S>, r: &[S]) -> Vec<S> {
        let interior = self.gather(grid, r);
        let z = self.solve_interior(&interior);
        self.scatter(grid, &z)
    }

    fn gather(&self, grid: &GridSpec<S>, full: &[S]) -> Vec<S> {
        if self.dim == 1 {
            return full[1..=self.n0].to_vec();
        }
        let mut out = Vec::with_capacity(self.n0 * self.n1);
        for i in 0..self.n0 {
            let start = grid.index(i + 1, 1);
            out.extend_from_slice(&full[start..start + self.n1]);
        }
        out
    }

    fn scatter(&self, grid: &GridSpec<S>, interior: &[S]) -> Vec<S> {
        let mut full = vec![S::zero(); grid.len()];
        if self.dim == 1 {
            full[1..=self.n0].copy_from_slice(interior);
            return full;
        }
        for i in 0..self.n0 {
            let start = grid.index(i + 1, 1);
            full[start..start + self.n1].copy_from_slice(&interior[i * self.n1..(i + 1) * self.n1]);
        }
        full
    }
}

/// `X·S` for `X` of shape `rows × n` and symmetric `S` of shape `n × n`.
fn right_mul<S: Real>(x: &[S], s: &[S], rows: usize, n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); rows * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = &x[i * n..(i + 1) * n];
        for (k, &xv) in xi.iter().enumerate() {
            let sk = &s[k * n..(k + 1) * n];
            for (o, &sv) in row.iter_mut().zip(sk) {
                *o = *o + xv * sv;
            }
        }
    });
    out
}

/// `S·X` for symmetric `S` of shape `rows × rows` and `X` of shape `rows × n`.
fn left_mul<S: Real>(s: &[S], x: &[S], rows: usize, n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); rows * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let si = &s[i * rows..(i + 1) * rows];
        for (k, &sv) in si.iter().enumerate() {
            let xk = &x[k * n..(k + 1) * n];
            for (o, &xv) in row.iter_mut().zip(xk) {
                *o = *o + sv * xv;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_k(grid: &GridSpec<f64>, x: &[f64]) -> Vec<f64> {
        let (n0, n1) = (grid.shape()[0] - 2, grid.shape()[1] - 2);
        let (h0, h1) = (grid.spacing()[0], grid.spacing()[1]);
        let at = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= n0 as isize || j >= n1 as isize {
                0.0
            } else {
                x[i as usize * n1 + j as usize]
            }
        };
        let mut out = vec![0.0; n0 * n1];
        for i in 0..n0 as isize {
            for j in 0..n1 as isize {
                out[i as usize * n1 + j as usize] = (h1 / h0) * (2.0 * at(i, j) - at(i - 1, j) - at(i + 1, j))
                    + (h0 / h1) * (2.0 * at(i, j) - at(i, j - 1) - at(i, j + 1));
            }
        }
        out
    }

    #[test]
    fn inverts_the_two_dimensional_laplacian() {
        let grid = GridSpec::nodal(2, &[9, 7], &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let p = LaplacePreconditioner::new(&grid);
        let b: Vec<f64> = (0..35).map(|k| ((k * 37 % 11) as f64) - 5.0).collect();
        let x = p.solve_interior(&b);
        let back = apply_k(&grid, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn inverts_the_one_dimensional_laplacian() {
        let grid = GridSpec::nodal(1, &[8], &[0.0], &[2.0]).unwrap();
        let p = LaplacePreconditioner::new(&grid);
        let h = grid.spacing()[0];
        let b = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
        let x = p.solve_interior(&b);
        for i in 0..6 {
            let l: f64 = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i < 5 { x[i + 1] } else { 0.0 };
            assert!(((2.0 * x[i] - l - r) / h - b[i]).abs() < 1e-12);
        }
    }
}
