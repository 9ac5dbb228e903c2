//! Finite-difference stencils shared by the operator modules.
//!
//! Fields are compactly supported in the interior, so stencils treat
//! out-of-range samples as zero; consumers must keep data away from the
//! boundary (the trusted-region convention).

use rayon::prelude::*;

use crate::fields::{Grid2D, ScalarField2D, VectorField2D};

/// Fourth-order centered partial derivative along `axis` (0 = x, 1 = y).
pub(crate) fn fd4_partial(f: &ScalarField2D, axis: usize) -> ScalarField2D {
    let grid = *f.grid();
    let n = grid.n() as isize;
    let inv12h = 1.0 / (12.0 * grid.spacing());
    let data = f.data();
    let at = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= n || iy >= n {
            0.0
        } else {
            data[(iy * n + ix) as usize]
        }
    };
    let mut out = vec![0.0f64; grid.len()];
    out.par_chunks_mut(n as usize).enumerate().for_each(|(iy, row)| {
        let iy = iy as isize;
        for (ix, v) in row.iter_mut().enumerate() {
            let ix = ix as isize;
            let s = |o: isize| match axis {
                0 => at(ix + o, iy),
                _ => at(ix, iy + o),
            };
            *v = (8.0 * (s(1) - s(-1)) - (s(2) - s(-2))) * inv12h;
        }
    });
    ScalarField2D::from_data(grid, out)
}

/// Sixth-order centered partial derivative along `axis`: the gradient
/// products feeding the near-field pressure convolution need truncation
/// error well below the operator-equivalence tolerances, and a local
/// stencil stays robust on truncated data.
pub(crate) fn fd6_partial(f: &ScalarField2D, axis: usize) -> ScalarField2D {
    let grid = *f.grid();
    let n = grid.n() as isize;
    let inv60h = 1.0 / (60.0 * grid.spacing());
    let data = f.data();
    let at = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= n || iy >= n {
            0.0
        } else {
            data[(iy * n + ix) as usize]
        }
    };
    let mut out = vec![0.0f64; grid.len()];
    out.par_chunks_mut(n as usize).enumerate().for_each(|(iy, row)| {
        let iy = iy as isize;
        for (ix, v) in row.iter_mut().enumerate() {
            let ix = ix as isize;
            let s = |o: isize| match axis {
                0 => at(ix + o, iy),
                _ => at(ix, iy + o),
            };
            *v = (45.0 * (s(1) - s(-1)) - 9.0 * (s(2) - s(-2)) + (s(3) - s(-3))) * inv60h;
        }
    });
    ScalarField2D::from_data(grid, out)
}

/// Second-order centered partial derivative along `axis`.
pub(crate) fn fd2_partial(f: &ScalarField2D, axis: usize) -> ScalarField2D {
    let grid = *f.grid();
    let n = grid.n() as isize;
    let inv2h = 1.0 / (2.0 * grid.spacing());
    let data = f.data();
    let at = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= n || iy >= n {
            0.0
        } else {
            data[(iy * n + ix) as usize]
        }
    };
    let mut out = vec![0.0f64; grid.len()];
    out.par_chunks_mut(n as usize).enumerate().for_each(|(iy, row)| {
        let iy = iy as isize;
        for (ix, v) in row.iter_mut().enumerate() {
            let ix = ix as isize;
            *v = match axis {
                0 => (at(ix + 1, iy) - at(ix - 1, iy)) * inv2h,
                _ => (at(ix, iy + 1) - at(ix, iy - 1)) * inv2h,
            };
        }
    });
    ScalarField2D::from_data(grid, out)
}

/// Fourth-order curl of a vector field.
pub(crate) fn fd4_curl(u: &VectorField2D) -> ScalarField2D {
    let grid = *u.grid();
    let du2_dx = fd4_partial(&ScalarField2D::from_data(grid, u.u2().to_vec()), 0);
    let du1_dy = fd4_partial(&ScalarField2D::from_data(grid, u.u1().to_vec()), 1);
    let data = du2_dx
        .data()
        .iter()
        .zip(du1_dy.data())
        .map(|(a, b)| a - b)
        .collect();
    ScalarField2D::from_data(grid, data)
}

/// Second-order divergence of a vector field.
pub(crate) fn fd2_divergence(u: &VectorField2D) -> ScalarField2D {
    let grid = *u.grid();
    let du1_dx = fd2_partial(&ScalarField2D::from_data(grid, u.u1().to_vec()), 0);
    let du2_dy = fd2_partial(&ScalarField2D::from_data(grid, u.u2().to_vec()), 1);
    let data = du1_dx
        .data()
        .iter()
        .zip(du2_dy.data())
        .map(|(a, b)| a + b)
        .collect();
    ScalarField2D::from_data(grid, data)
}

#[allow(dead_code)]
pub(crate) fn grid_of(f: &ScalarField2D) -> Grid2D {
    *f.grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2D;

    #[test]
    fn fd4_matches_analytic_derivative() {
        let grid = Grid2D::new(128, 4.0).unwrap();
        let f = ScalarField2D::from_fn(grid, |x, y| (-(x * x + y * y)).exp());
        let dfdx = fd4_partial(&f, 0);
        let n = grid.n();
        for &(ix, iy) in &[(64usize, 64usize), (70, 60), (50, 66)] {
            let x = grid.coord(ix);
            let y = grid.coord(iy);
            let exact = -2.0 * x * (-(x * x + y * y)).exp();
            let got = dfdx.get(ix, iy);
            assert!((got - exact).abs() < 5e-5, "({ix},{iy}): {got} vs {exact}");
        }
        let _ = n;
    }
}
