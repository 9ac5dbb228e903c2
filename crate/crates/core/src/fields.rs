//! Grids, scalar/vector fields, smooth radial cutoff profiles, dyadic
//! spatial partitions and bit-exact snapshot I/O.
//!
//! The computational domain is the centered square `[-L, L]^2` sampled at
//! `n x n` cell centers. Unbounded fields enter the toolkit only through
//! truncated representatives on such grids; everything downstream tracks how
//! far the truncation can be trusted.

use rayon::prelude::*;
use thiserror::Error;

use crate::smooth::{smoothstep, smoothstep_jet, Jet3};

mod snapshot;
pub use snapshot::{read_raw_snapshot, write_raw_snapshot, RawSnapshot, SnapshotError};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size {n} is invalid: need a power of two >= 16")]
    InvalidGridSize { n: usize },
    #[error("grid half-width {half_width} must be positive and finite")]
    InvalidHalfWidth { half_width: f64 },
    #[error("cutoff radii ({r0}, {r1}) invalid: need 0 < r0 < r1")]
    InvalidCutoff { r0: f64, r1: f64 },
    #[error("non-finite sample {value} at point ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64, value: f64 },
    #[error("grids differ: {0}x{0} vs {1}x{1} or mismatched extent")]
    GridMismatch(usize, usize),
    #[error("dyadic base radius {0} must be >= 1")]
    InvalidBaseRadius(f64),
}

/// Uniform cell-centered grid over `[-L, L]^2` with `n` samples per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    half_width: f64,
}

impl Grid2D {
    pub fn new(n: usize, half_width: f64) -> Result<Self, FieldError> {
        if n < 16 || !n.is_power_of_two() {
            return Err(FieldError::InvalidGridSize { n });
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(FieldError::InvalidHalfWidth { half_width });
        }
        Ok(Grid2D { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Physical coordinate of cell center `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major linear index; `ix` varies fastest.
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn same_as(&self, other: &Grid2D) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch(self.n, other.n))
        }
    }

    /// Largest radius fully contained in the domain.
    pub fn inscribed_radius(&self) -> f64 {
        self.half_width
    }
}

/// Real scalar samples over a [`Grid2D`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    data: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField2D { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_data(grid: Grid2D, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "data length does not match grid");
        ScalarField2D { grid, data }
    }

    /// Pointwise sampling of `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.n();
        let mut data = vec![0.0; grid.len()];
        data.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let y = grid.coord(iy);
            for (ix, v) in row.iter_mut().enumerate() {
                *v = f(grid.coord(ix), y);
            }
        });
        ScalarField2D { grid, data }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[self.grid.idx(ix, iy)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn assert_finite(&self) -> Result<(), FieldError> {
        for (k, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                let n = self.grid.n();
                return Err(FieldError::NonFiniteSample {
                    x: self.grid.coord(k % n),
                    y: self.grid.coord(k / n),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Sample a radial function `f(r)` at cell centers.
///
/// Aborts with a diagnostic naming the offending point if any sample is
/// non-finite.
pub fn sample_radial(
    grid: Grid2D,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<ScalarField2D, FieldError> {
    let field = ScalarField2D::from_fn(grid, |x, y| f(x.hypot(y)));
    field.assert_finite()?;
    Ok(field)
}

/// Two-component real vector field over a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    grid: Grid2D,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl VectorField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        VectorField2D { grid, u1: vec![0.0; grid.len()], u2: vec![0.0; grid.len()] }
    }

    pub fn from_components(c1: ScalarField2D, c2: ScalarField2D) -> Result<Self, FieldError> {
        c1.grid().same_as(c2.grid())?;
        Ok(VectorField2D { grid: *c1.grid(), u1: c1.data, u2: c2.data })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> [f64; 2] + Sync) -> Self {
        let n = grid.n();
        let mut u1 = vec![0.0; grid.len()];
        let mut u2 = vec![0.0; grid.len()];
        u1.par_chunks_mut(n).zip(u2.par_chunks_mut(n)).enumerate().for_each(
            |(iy, (row1, row2))| {
                let y = grid.coord(iy);
                for ix in 0..n {
                    let v = f(grid.coord(ix), y);
                    row1[ix] = v[0];
                    row2[ix] = v[1];
                }
            },
        );
        VectorField2D { grid, u1, u2 }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn component(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.u1,
            1 => &self.u2,
            _ => panic!("component index {c} out of range"),
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> [f64; 2] {
        let k = self.grid.idx(ix, iy);
        [self.u1[k], self.u2[k]]
    }

    pub fn max_norm(&self) -> f64 {
        self.u1
            .iter()
            .zip(&self.u2)
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Pointwise |u|^2 as a scalar field.
    pub fn speed_squared(&self) -> ScalarField2D {
        let data = self.u1.iter().zip(&self.u2).map(|(a, b)| a * a + b * b).collect();
        ScalarField2D { grid: self.grid, data }
    }
}

/// Radial C-infinity transition profile: identically 1 on `|x| <= r0`,
/// identically 0 on `|x| >= r1`, built from the `exp(-1/t)` smooth step so
/// that all derivatives vanish at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    inner_radius: f64,
    outer_radius: f64,
}

/// Build a cutoff profile with plateau radius `r0` and support radius `r1`.
pub fn make_cutoff(r0: f64, r1: f64) -> Result<CutoffProfile, FieldError> {
    CutoffProfile::new(r0, r1)
}

impl CutoffProfile {
    pub fn new(r0: f64, r1: f64) -> Result<Self, FieldError> {
        if !(r0 > 0.0) || !(r1 > r0) || !r1.is_finite() {
            return Err(FieldError::InvalidCutoff { r0, r1 });
        }
        Ok(CutoffProfile { inner_radius: r0, outer_radius: r1 })
    }

    /// The canonical unit profile: 1 on `B_1`, supported in `B_2`.
    pub fn unit() -> Self {
        CutoffProfile { inner_radius: 1.0, outer_radius: 2.0 }
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Profile value at radius `r` (monotone non-increasing, in [0, 1]).
    pub fn eval(&self, r: f64) -> f64 {
        smoothstep((self.outer_radius - r.abs()) / (self.outer_radius - self.inner_radius))
    }

    /// Value and first three radial derivatives at `r >= 0`.
    pub fn eval_jet(&self, r: f64) -> Jet3 {
        let width = self.outer_radius - self.inner_radius;
        let t = (self.outer_radius - r) / width;
        // chain rule for the affine inner map with slope -1/width
        smoothstep_jet(t).compose_affine(-1.0 / width)
    }

    pub fn eval_point(&self, x: f64, y: f64) -> f64 {
        self.eval(x.hypot(y))
    }

    /// The rescaled profile `x -> chi(x / scale)`.
    pub fn rescaled(&self, scale: f64) -> CutoffProfile {
        CutoffProfile {
            inner_radius: self.inner_radius * scale,
            outer_radius: self.outer_radius * scale,
        }
    }

    /// Supremum of |d chi / dr| over the transition zone.
    pub fn grad_sup(&self) -> f64 {
        let samples = 4096;
        let width = self.outer_radius - self.inner_radius;
        (0..=samples)
            .map(|k| {
                let r = self.inner_radius + width * k as f64 / samples as f64;
                self.eval_jet(r).d1.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn sample(&self, grid: Grid2D) -> ScalarField2D {
        ScalarField2D::from_fn(grid, |x, y| self.eval_point(x, y))
    }
}

/// Classification of a point against a dyadic partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicCell {
    /// Inside the base ball `B_R`.
    Core,
    /// Inside annulus `A_k(R) = { 2^k R <= |y| < 2^{k+1} R }`.
    Annulus(usize),
}

/// The dyadic annuli `A_k(R)` covering everything outside `B_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPartition {
    base_radius: f64,
    k_max: usize,
}

impl DyadicPartition {
    /// Partition with base radius `R >= 1`, with enough annuli to cover the
    /// grid domain (corners included).
    pub fn covering(grid: &Grid2D, base_radius: f64) -> Result<Self, FieldError> {
        if !(base_radius >= 1.0) {
            return Err(FieldError::InvalidBaseRadius(base_radius));
        }
        let r_corner = grid.half_width() * std::f64::consts::SQRT_2;
        let mut k_max = 0usize;
        while base_radius * 2f64.powi(k_max as i32 + 1) < r_corner {
            k_max += 1;
        }
        Ok(DyadicPartition { base_radius, k_max })
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Annulus radii `[2^k R, 2^{k+1} R)`.
    pub fn annulus_bounds(&self, k: usize) -> (f64, f64) {
        let lo = self.base_radius * 2f64.powi(k as i32);
        (lo, 2.0 * lo)
    }

    pub fn classify(&self, r: f64) -> DyadicCell {
        if r < self.base_radius {
            return DyadicCell::Core;
        }
        let mut k = (r / self.base_radius).log2().floor() as i64;
        // log2 can land on the wrong side of a power boundary; settle by
        // direct comparison with the exact bounds
        while k > 0 && r < self.base_radius * 2f64.powi(k as i32) {
            k -= 1;
        }
        while r >= self.base_radius * 2f64.powi(k as i32 + 1) {
            k += 1;
        }
        DyadicCell::Annulus((k.max(0) as usize).min(self.k_max))
    }
}
