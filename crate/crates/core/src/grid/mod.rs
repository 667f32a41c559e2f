//! Cell-centred rectangular grids in one or two dimensions.
//!
//! Fields live on uniform grids; values are stored row-major with axis 0
//! varying slowest. In one dimension the second axis is a dummy of length 1.

mod calculus;
mod io;
mod norms;
mod test_functions;

pub use calculus::{divergence, gradient};
pub use io::{read_field_csv, write_field_csv, FieldHeader};
pub use norms::{
    a_rk, ball_integral, ball_volume, ball_weights, covered_cells, integral_average, lp_norm,
    oscillation, scale_invariant_gradient_norm, scale_invariant_norm, NormSpec,
};
pub use test_functions::{bump_test_family, cutoff, truncated_power, truncated_power_derivative};

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 cells along axis {axis}, found {cells}")]
    GridTooSmall { axis: usize, cells: usize },
    #[error("unsupported dimension {0}; only 1 and 2 are supported")]
    UnsupportedDimension(usize),
    #[error("grid spacing must be positive and finite")]
    InvalidSpacing,
    #[error("field value at cell {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("norm exponent must be non-zero")]
    ZeroExponent,
    #[error("negative exponent needs a non-negative field; cell {index} holds {value}")]
    NegativePNonNonnegativeField { index: usize, value: f64 },
    #[error("ball (center {center:?}, radius {radius}) escapes the grid domain")]
    BallEscapesDomain { center: [f64; 2], radius: f64 },
    #[error("ball (center {center:?}, radius {radius}) covers no cells")]
    EmptyBall { center: [f64; 2], radius: f64 },
    #[error("invalid ball or ball pair: {0}")]
    InvalidBall(String),
    #[error("test family cannot be placed: {0}")]
    TestFamily(String),
    #[error("field file: {0}")]
    Format(String),
    #[error("field file i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GridError>;

/// Geometry of a uniform cell-centred grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<S> {
    dim: usize,
    shape: [usize; 2],
    spacing: [S; 2],
    origin: [S; 2],
}

impl<S: Real> GridSpec<S> {
    /// Grid with `shape[a]` cells of width `spacing[a]` starting at the
    /// domain corner `origin`.
    pub fn new(dim: usize, shape: &[usize], spacing: &[S], origin: &[S]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if shape.len() != dim || spacing.len() != dim || origin.len() != dim {
            return Err(GridError::Format(format!(
                "shape/spacing/origin must have {dim} entries"
            )));
        }
        let mut s = [1usize; 2];
        let mut h = [S::one(); 2];
        let mut o = [S::zero(); 2];
        for a in 0..dim {
            if !(spacing[a] > S::zero() && spacing[a].is_finite()) {
                return Err(GridError::InvalidSpacing);
            }
            if shape[a] == 0 {
                return Err(GridError::GridTooSmall { axis: a, cells: 0 });
            }
            if !origin[a].is_finite() {
                return Err(GridError::Format("origin must be finite".into()));
            }
            s[a] = shape[a];
            h[a] = spacing[a];
            o[a] = origin[a];
        }
        Ok(Self {
            dim,
            shape: s,
            spacing: h,
            origin: o,
        })
    }

    /// Grid whose first and last cell centres sit exactly on `lo` and `hi`.
    ///
    /// This is the layout used by the solver: the outer layer of cells
    /// carries Dirichlet data sampled on the boundary of `[lo, hi]`.
    pub fn nodal(dim: usize, cells: &[usize], lo: &[S], hi: &[S]) -> Result<Self> {
        if cells.len() != dim || lo.len() != dim || hi.len() != dim {
            return Err(GridError::Format(format!(
                "cells/lo/hi must have {dim} entries"
            )));
        }
        let mut spacing = Vec::with_capacity(dim);
        let mut origin = Vec::with_capacity(dim);
        for a in 0..dim {
            if cells[a] < 2 {
                return Err(GridError::GridTooSmall {
                    axis: a,
                    cells: cells[a],
                });
            }
            let h = (hi[a] - lo[a]) / S::from_usize_lossy(cells[a] - 1);
            spacing.push(h);
            origin.push(lo[a] - h / S::lit(2.0));
        }
        Self::new(dim, cells, &spacing, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> &[S] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[S] {
        &self.origin[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of one cell, `h^d`.
    pub fn cell_volume(&self) -> S {
        (0..self.dim).fold(S::one(), |acc, a| acc * self.spacing[a])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape[1] + j
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> (usize, usize) {
        (idx / self.shape[1], idx % self.shape[1])
    }

    /// Cell centre; the unused second coordinate is zero in 1-D.
    #[inline]
    pub fn center(&self, idx: usize) -> [S; 2] {
        let (i, j) = self.multi_index(idx);
        let half = S::lit(0.5);
        let mut x = [S::zero(); 2];
        x[0] = self.origin[0] + (S::from_usize_lossy(i) + half) * self.spacing[0];
        if self.dim == 2 {
            x[1] = self.origin[1] + (S::from_usize_lossy(j) + half) * self.spacing[1];
        }
        x
    }

    /// Whether the cell lies in the outermost layer.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.multi_index(idx);
        let on0 = i == 0 || i + 1 == self.shape[0];
        if self.dim == 1 {
            on0
        } else {
            on0 || j == 0 || j + 1 == self.shape[1]
        }
    }

    /// Lower and upper corner of the covered box along `axis`.
    pub fn bounds(&self, axis: usize) -> (S, S) {
        let lo = self.origin[axis];
        (
            lo,
            lo + S::from_usize_lossy(self.shape[axis]) * self.spacing[axis],
        )
    }

    /// Whether the closed ball fits inside the covered box.
    pub fn contains_ball(&self, ball: &Ball<S>) -> bool {
        let slack = S::lit(1e-12) * (S::one() + ball.radius);
        (0..self.dim).all(|a| {
            let (lo, hi) = self.bounds(a);
            ball.center[a] - ball.radius >= lo - slack && ball.center[a] + ball.radius <= hi + slack
        })
    }

    pub fn require_ball_inside(&self, ball: &Ball<S>) -> Result<()> {
        if self.contains_ball(ball) {
            Ok(())
        } else {
            Err(GridError::BallEscapesDomain {
                center: [ball.center[0].as_f64(), ball.center[1].as_f64()],
                radius: ball.radius.as_f64(),
            })
        }
    }

    /// Largest cell width.
    pub fn max_spacing(&self) -> S {
        (0..self.dim).fold(S::zero(), |acc, a| acc.max(self.spacing[a]))
    }

    /// Length of the domain diagonal.
    pub fn diameter(&self) -> S {
        (0..self.dim)
            .map(|a| {
                let (lo, hi) = self.bounds(a);
                (hi - lo) * (hi - lo)
            })
            .sum::<S>()
            .sqrt()
    }

    pub(crate) fn check_min_cells(&self, min: usize) -> Result<()> {
        for a in 0..self.dim {
            if self.shape[a] < min {
                return Err(GridError::GridTooSmall {
                    axis: a,
                    cells: self.shape[a],
                });
            }
        }
        Ok(())
    }

    /// Converts the geometry to `f64` (used by the file format).
    pub fn to_f64(&self) -> GridSpec<f64> {
        GridSpec {
            dim: self.dim,
            shape: self.shape,
            spacing: [self.spacing[0].as_f64(), self.spacing[1].as_f64()],
            origin: [self.origin[0].as_f64(), self.origin[1].as_f64()],
        }
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball<S> {
    pub center: [S; 2],
    pub radius: S,
}

impl<S: Real> Ball<S> {
    pub fn new(center: &[S], radius: S) -> Self {
        let mut c = [S::zero(); 2];
        for (dst, &src) in c.iter_mut().zip(center) {
            *dst = src;
        }
        Self { center: c, radius }
    }

    /// Concentric ball with radius scaled by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        Self {
            center: self.center,
            radius: self.radius * factor,
        }
    }

    pub fn with_radius(&self, radius: S) -> Self {
        Self {
            center: self.center,
            radius,
        }
    }

    #[inline]
    pub fn distance(&self, x: &[S; 2]) -> S {
        let d0 = x[0] - self.center[0];
        let d1 = x[1] - self.center[1];
        (d0 * d0 + d1 * d1).sqrt()
    }
}

/// Scalar field sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<S> {
    grid: GridSpec<S>,
    values: Vec<S>,
}

impl<S: Real> ScalarField<S> {
    pub fn new(grid: GridSpec<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec<S>) -> Self {
        Self::constant(grid, S::zero())
    }

    pub fn constant(grid: GridSpec<S>, c: S) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every cell centre (the closure sees `dim` coordinates).
    pub fn from_fn(grid: GridSpec<S>, f: impl Fn(&[S]) -> S) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.center(idx);
                f(&x[..d])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec<S> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> S {
        self.values[idx]
    }

    /// Applies `f` cell-wise; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(S) -> S) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    /// Largest absolute difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<S> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }
}

/// Vector field with one component per spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<S> {
    grid: GridSpec<S>,
    components: Vec<Vec<S>>,
}

impl<S: Real> VectorField<S> {
    pub fn new(grid: GridSpec<S>, components: Vec<Vec<S>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(GridError::Format(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(GridError::LengthMismatch {
                    expected: grid.len(),
                    found: c.len(),
                });
            }
            if let Some(index) = c.iter().position(|v| !v.is_finite()) {
                return Err(GridError::NonFiniteValue { index });
            }
        }
        Ok(Self { grid, components })
    }

    pub fn from_fn(grid: GridSpec<S>, f: impl Fn(&[S]) -> [S; 2]) -> Result<Self> {
        let d = grid.dim();
        let mut components = vec![Vec::with_capacity(grid.len()); d];
        for idx in 0..grid.len() {
            let x = grid.center(idx);
            let v = f(&x[..d]);
            for a in 0..d {
                components[a].push(v[a]);
            }
        }
        Self::new(grid, components)
    }

    pub fn grid(&self) -> &GridSpec<S> {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[S] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<S>] {
        &self.components
    }

    /// Vector at one cell, zero-padded to two entries.
    #[inline]
    pub fn at(&self, idx: usize) -> [S; 2] {
        let mut v = [S::zero(); 2];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c[idx];
        }
        v
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField<S> {
        let values = (0..self.grid.len())
            .map(|idx| {
                let v = self.at(idx);
                (v[0] * v[0] + v[1] * v[1]).sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_grid_puts_centres_on_endpoints() {
        let g = GridSpec::<f64>::nodal(2, &[5, 3], &[0.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(g.center(0), [0.0, -1.0]);
        let last = g.center(g.len() - 1);
        assert!((last[0] - 1.0).abs() < 1e-15 && (last[1] - 1.0).abs() < 1e-15);
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(g.index(2, 1)));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert_eq!(
            GridSpec::<f64>::new(3, &[1, 1, 1], &[1.0; 3], &[0.0; 3]),
            Err(GridError::UnsupportedDimension(3))
        );
        assert_eq!(
            GridSpec::<f64>::new(1, &[4], &[0.0], &[0.0]),
            Err(GridError::InvalidSpacing)
        );
    }

    #[test]
    fn nan_values_are_rejected() {
        let g = GridSpec::<f64>::new(1, &[3], &[1.0], &[0.0]).unwrap();
        let err = ScalarField::new(g, vec![0.0, f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err, GridError::NonFiniteValue { index: 1 });
    }

    #[test]
    fn ball_containment() {
        let g = GridSpec::<f64>::new(2, &[10, 10], &[0.1, 0.1], &[0.0, 0.0]).unwrap();
        assert!(g.contains_ball(&Ball::new(&[0.5, 0.5], 0.5)));
        assert!(!g.contains_ball(&Ball::new(&[0.5, 0.5], 0.51)));
    }
}
