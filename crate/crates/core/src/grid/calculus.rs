use super::{GridSpec, Result, ScalarField, VectorField};
use crate::scalar::Real;

/// Line view of a field along one axis: `len` entries starting at `start`
/// with the given `stride`.
struct Line {
    start: usize,
    stride: usize,
    len: usize,
}

fn lines<S: Real>(grid: &GridSpec<S>, axis: usize) -> impl Iterator<Item = Line> + '_ {
    let shape = [grid.shape()[0], if grid.dim() == 2 { grid.shape()[1] } else { 1 }];
    let (count, stride, step) = if axis == 0 {
        (shape[1], shape[1], 1)
    } else {
        (shape[0], 1, shape[1])
    };
    (0..count).map(move |k| Line {
        start: k * step,
        stride,
        len: shape[axis],
    })
}

/// Second-order difference along one line: central inside, one-sided at
/// both ends.
fn diff_line<S: Real>(input: &[S], out: &mut [S], line: &Line, h: S) {
    let c = S::one() / (S::lit(2.0) * h);
    let at = |i: usize| input[line.start + i * line.stride];
    let n = line.len;
    let three = S::lit(3.0);
    let four = S::lit(4.0);
    out[line.start] = c * (-three * at(0) + four * at(1) - at(2));
    for i in 1..n - 1 {
        out[line.start + i * line.stride] = c * (at(i + 1) - at(i - 1));
    }
    out[line.start + (n - 1) * line.stride] = c * (three * at(n - 1) - four * at(n - 2) + at(n - 3));
}

/// Transpose of [`diff_line`], accumulated into `out`.
fn diff_line_transpose_add<S: Real>(input: &[S], out: &mut [S], line: &Line, h: S) {
    let c = S::one() / (S::lit(2.0) * h);
    let n = line.len;
    let idx = |i: usize| line.start + i * line.stride;
    let three = S::lit(3.0);
    let four = S::lit(4.0);
    let f0 = input[idx(0)];
    out[idx(0)] = out[idx(0)] - three * c * f0;
    out[idx(1)] = out[idx(1)] + four * c * f0;
    out[idx(2)] = out[idx(2)] - c * f0;
    for i in 1..n - 1 {
        let f = input[idx(i)];
        out[idx(i - 1)] = out[idx(i - 1)] - c * f;
        out[idx(i + 1)] = out[idx(i + 1)] + c * f;
    }
    let fl = input[idx(n - 1)];
    out[idx(n - 3)] = out[idx(n - 3)] + c * fl;
    out[idx(n - 2)] = out[idx(n - 2)] - four * c * fl;
    out[idx(n - 1)] = out[idx(n - 1)] + three * c * fl;
}

/// Discrete gradient: central differences inside, second-order one-sided
/// differences in the boundary layer. Exact on affine fields.
pub fn gradient<S: Real>(u: &ScalarField<S>) -> Result<VectorField<S>> {
    let grid = *u.grid();
    grid.check_min_cells(3)?;
    let mut components = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let mut out = vec![S::zero(); grid.len()];
        let h = grid.spacing()[axis];
        for line in lines(&grid, axis) {
            diff_line(u.values(), &mut out, &line, h);
        }
        components.push(out);
    }
    VectorField::new(grid, components)
}

/// Discrete divergence, defined as the negative adjoint of [`gradient`]
/// under the cell-sum inner product:
/// `Σ F·(∇φ) h^d = −Σ (div F) φ h^d` for every `F`, `φ`.
pub fn divergence<S: Real>(field: &VectorField<S>) -> Result<ScalarField<S>> {
    let grid = *field.grid();
    grid.check_min_cells(3)?;
    let mut acc = vec![S::zero(); grid.len()];
    for axis in 0..grid.dim() {
        let h = grid.spacing()[axis];
        for line in lines(&grid, axis) {
            diff_line_transpose_add(field.component(axis), &mut acc, &line, h);
        }
    }
    let values: Vec<S> = acc.into_iter().map(|v| -v).collect();
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridError;

    fn grid2(n: usize) -> GridSpec<f64> {
        GridSpec::nodal(2, &[n, n], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let u = ScalarField::constant(grid2(7), 3.5);
        let g = gradient(&u).unwrap();
        assert!(g.component(0).iter().chain(g.component(1)).all(|&v| v == 0.0));
    }

    #[test]
    fn affine_field_is_differentiated_exactly() {
        let u = ScalarField::from_fn(grid2(9), |x| x[0]).unwrap();
        let g = gradient(&u).unwrap();
        for idx in 0..u.grid().len() {
            assert!((g.component(0)[idx] - 1.0).abs() < 1e-12);
            assert!(g.component(1)[idx].abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_grid_is_rejected() {
        let g = GridSpec::<f64>::new(2, &[2, 5], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let u = ScalarField::zeros(g);
        assert_eq!(
            gradient(&u).unwrap_err(),
            GridError::GridTooSmall { axis: 0, cells: 2 }
        );
    }

    #[test]
    fn divergence_of_constant_vanishes_inside() {
        let g = grid2(10);
        let f = VectorField::from_fn(g, |_| [2.0, -1.0]).unwrap();
        let div = divergence(&f).unwrap();
        for idx in 0..g.len() {
            let (i, j) = g.multi_index(idx);
            if (3..7).contains(&i) && (3..7).contains(&j) {
                assert!(div.get(idx).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_gradient_second_order_at_boundary() {
        let g = GridSpec::<f64>::nodal(1, &[11], &[0.0], &[1.0]).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] * x[0]).unwrap();
        let du = gradient(&u).unwrap();
        // one-sided three-point formula is exact on quadratics
        for idx in 0..g.len() {
            let x = g.center(idx)[0];
            assert!((du.component(0)[idx] - 2.0 * x).abs() < 1e-12);
        }
    }
}
