//! Pressure-force operators for velocity fields of sub-square-root growth.
//!
//! Two routes compute the gradient of the pressure induced by a pair of
//! divergence-free fields: the split-kernel operator (near convolution of
//! `grad (theta E)` against velocity-gradient products plus a far
//! convolution of the third-derivative tensor against velocity products)
//! and the low-pass split (a spectral high-frequency multiplier plus a
//! physical convolution with the composite kernel at scale 1). A fully
//! spectral Leray projection serves as the oracle on decaying data.
//!
//! Every output carries a trusted radius and the analytic bound for the far
//! tail the truncated domain omits.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::biot_savart::GRAD_KERNEL_BIAS;
use crate::diffops::{fd4_partial, fd6_partial};
use crate::fft2d;
use crate::fields::{CutoffProfile, Grid2D, ScalarField2D, VectorField2D};
use crate::kernels::{self, KernelError};
use crate::morrey::{
    morrey_norm_vector, MorreyError, MorreyParams, TrustedRegion, DEFAULT_LADDER_RATIO,
};

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("growth rate alpha = {0} must satisfy 0 <= alpha < 1/2")]
    AlphaOutOfRange(f64),
    #[error("tensor product does not decay at the boundary ring: {ring:e} vs max {max:e}")]
    BoundaryDecay { ring: f64, max: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
    #[error(transparent)]
    Morrey(#[from] MorreyError),
}

/// Which operator and which cutoff instances produced a force field.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub operator: String,
    pub theta: Option<[f64; 2]>,
    pub lambda: Option<f64>,
}

/// A pressure-gradient candidate with its trust annotations.
#[derive(Debug, Clone)]
pub struct PressureForce {
    force: VectorField2D,
    pub provenance: Provenance,
    /// Outer radius beyond which truncation contamination begins.
    pub trusted_radius: f64,
    /// Bound on the far-tail contribution the truncated domain omits:
    /// `|u| |v| R^(2 alpha - 1) / (1 - 2 alpha)` in Morrey norms.
    pub tail_bound: f64,
}

impl PressureForce {
    pub fn force(&self) -> &VectorField2D {
        &self.force
    }

    pub fn grid(&self) -> &Grid2D {
        self.force.grid()
    }

    /// JSON sidecar carrying the trust annotations.
    pub fn sidecar_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            provenance: &'a Provenance,
            trusted_radius: f64,
            tail_bound: f64,
        }
        serde_json::to_string_pretty(&Sidecar {
            provenance: &self.provenance,
            trusted_radius: self.trusted_radius,
            tail_bound: self.tail_bound,
        })
        .expect("sidecar serialization cannot fail")
    }

    /// Write the force as a vector snapshot plus a `.json` sidecar.
    pub fn write_snapshot(
        &self,
        path: impl AsRef<std::path::Path>,
    ) -> Result<(), crate::fields::SnapshotError> {
        let path = path.as_ref();
        self.force.write_snapshot(path)?;
        let sidecar = path.with_extension("json");
        std::fs::write(sidecar, self.sidecar_json())?;
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<(), PressureError> {
    if (0.0..0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(PressureError::AlphaOutOfRange(alpha))
    }
}

/// Subtract the block mean from each component. Uniform streams are in the
/// kernel of the pressure operator (for divergence-free partners the cross
/// terms vanish), so operating on the fluctuation is exact and removes the
/// truncation artifacts a padded constant would create.
fn remove_mean(u: &VectorField2D) -> VectorField2D {
    let grid = *u.grid();
    let len = grid.len() as f64;
    let m1 = u.u1().iter().sum::<f64>() / len;
    let m2 = u.u2().iter().sum::<f64>() / len;
    VectorField2D::from_components(
        ScalarField2D::from_data(grid, u.u1().iter().map(|v| v - m1).collect()),
        ScalarField2D::from_data(grid, u.u2().iter().map(|v| v - m2).collect()),
    )
    .expect("same grid")
}

/// The contracted gradient product `sum_jk d_j u_k d_k v_j` by sixth-order
/// centered differences.
fn gradient_contraction(u: &VectorField2D, v: &VectorField2D) -> ScalarField2D {
    let grid = *u.grid();
    let du = |c: usize, axis: usize| {
        fd6_partial(&ScalarField2D::from_data(grid, u.component(c).to_vec()), axis)
    };
    let dv = |c: usize, axis: usize| {
        fd6_partial(&ScalarField2D::from_data(grid, v.component(c).to_vec()), axis)
    };
    // d_j u_k d_k v_j summed over j, k (both indices 0..2)
    let terms = [
        (du(0, 0), dv(0, 0)),
        (du(1, 0), dv(0, 1)),
        (du(0, 1), dv(1, 0)),
        (du(1, 1), dv(1, 1)),
    ];
    let mut data = vec![0.0f64; grid.len()];
    for (a, b) in &terms {
        data.par_iter_mut()
            .zip(a.data().par_iter().zip(b.data().par_iter()))
            .for_each(|(o, (x, y))| *o += x * y);
    }
    ScalarField2D::from_data(grid, data)
}

fn tail_bound(
    u: &VectorField2D,
    v: &VectorField2D,
    alpha: f64,
    trusted: &TrustedRegion,
) -> Result<f64, MorreyError> {
    let ladder = trusted.ladder(DEFAULT_LADDER_RATIO);
    let params = MorreyParams::new(2.0, alpha)?;
    let nu = morrey_norm_vector(u, params, &ladder, trusted)?.norm;
    let nv = morrey_norm_vector(v, params, &ladder, trusted)?.norm;
    let r = trusted.max_radius().max(1.0);
    Ok(nu * nv * r.powf(2.0 * alpha - 1.0) / (1.0 - 2.0 * alpha))
}

/// Split-kernel pressure operator with precomputed kernel spectra, for
/// repeated application on one grid. Kernel transforms are tabulated on an
/// oversampled displacement lattice so that marginally resolved cutoff
/// transitions do not alias.
pub struct SplitOperator {
    grid: Grid2D,
    theta: CutoffProfile,
    near_hats: Vec<fft2d::Doubled>,
    far_hats: Vec<fft2d::Doubled>,
    fine_spacing: f64,
}

impl SplitOperator {
    pub fn new(grid: &Grid2D, theta: &CutoffProfile) -> Result<Self, PressureError> {
        // validates the transition resolution
        kernels::tabulate_split_kernels(grid, theta)?;
        let over = kernels::oversampling_for(grid.n());
        let near_hats = (0..2)
            .map(|c| {
                fft2d::forward_wrapped_kernel_oversampled(grid, over, |dx, dy| {
                    kernels::near_kernel_value(theta, dx, dy, c)
                })
            })
            .collect();
        let far_hats = (0..8)
            .map(|c| {
                fft2d::forward_wrapped_kernel_oversampled(grid, over, |dx, dy| {
                    kernels::far_kernel_value(theta, dx, dy, c)
                })
            })
            .collect();
        Ok(SplitOperator {
            grid: *grid,
            theta: *theta,
            near_hats,
            far_hats,
            fine_spacing: grid.spacing() / over as f64,
        })
    }

    pub fn apply(
        &self,
        u: &VectorField2D,
        v: &VectorField2D,
        alpha: f64,
        trusted: &TrustedRegion,
    ) -> Result<PressureForce, PressureError> {
        check_alpha(alpha)?;
        u.grid().same_as(v.grid())?;
        self.grid.same_as(u.grid())?;
        let grid = self.grid;
        let tail = tail_bound(u, v, alpha, trusted)?;
        let u = remove_mean(u);
        let v = remove_mean(v);

        let w = gradient_contraction(&u, &v);
        let w_hat = fft2d::forward_padded(&grid, w.data());
        // the zeroed singular cell of the fine tabulation loses its first
        // moment, (h_fine^2 / 4pi) d_l W
        let bias = GRAD_KERNEL_BIAS * self.fine_spacing * self.fine_spacing;
        let mut force: Vec<Vec<f64>> = (0..2)
            .map(|l| {
                let mut f = fft2d::convolve(&self.near_hats[l], &w_hat, &grid);
                let dw = fd6_partial(&w, l);
                f.par_iter_mut()
                    .zip(dw.data().par_iter())
                    .for_each(|(o, &d)| *o += bias * d);
                f
            })
            .collect();

        // far term: tensor convolution against the products u_j v_k
        for j in 0..2 {
            for k in 0..2 {
                let prod: Vec<f64> =
                    u.component(j).iter().zip(v.component(k)).map(|(a, b)| a * b).collect();
                let p_hat = fft2d::forward_padded(&grid, &prod);
                for (l, f) in force.iter_mut().enumerate() {
                    let add = fft2d::convolve(&self.far_hats[4 * l + 2 * j + k], &p_hat, &grid);
                    f.par_iter_mut().zip(add.par_iter()).for_each(|(o, &a)| *o += a);
                }
            }
        }

        let [f1, f2] = <[Vec<f64>; 2]>::try_from(force).unwrap();
        Ok(PressureForce {
            force: VectorField2D::from_components(
                ScalarField2D::from_data(grid, f1),
                ScalarField2D::from_data(grid, f2),
            )?,
            provenance: Provenance {
                operator: "split".into(),
                theta: Some([self.theta.inner_radius(), self.theta.outer_radius()]),
                lambda: None,
            },
            trusted_radius: (trusted.max_radius() - self.theta.outer_radius()).max(0.0),
            tail_bound: tail,
        })
    }
}

/// Split-kernel pressure force: near term `grad (theta E) * (d_j u_k d_k
/// v_j)` plus far term `grad d_j d_k ((1 - theta) E) * (u_j v_k)`.
pub fn pressure_force_split(
    u: &VectorField2D,
    v: &VectorField2D,
    theta: &CutoffProfile,
    alpha: f64,
    trusted: &TrustedRegion,
) -> Result<PressureForce, PressureError> {
    SplitOperator::new(u.grid(), theta)?.apply(u, v, alpha, trusted)
}

/// Low-pass split pressure operator with the composite-kernel spectra
/// precomputed at scale 1.
pub struct LowPassOperator {
    grid: Grid2D,
    theta: CutoffProfile,
    gamma_hats: Vec<fft2d::Doubled>,
    profile: kernels::LowPassProfile,
}

impl LowPassOperator {
    pub fn new(grid: &Grid2D, theta: &CutoffProfile) -> Result<Self, PressureError> {
        let lambda = 1.0;
        let gamma = kernels::gamma_lambda(grid, lambda, theta)?;
        let gamma_hats = (0..8).map(|c| gamma.forward_component(c)).collect();
        Ok(LowPassOperator {
            grid: *grid,
            theta: *theta,
            gamma_hats,
            profile: kernels::LowPassProfile::new(lambda)?,
        })
    }

    pub fn apply(
        &self,
        u: &VectorField2D,
        v: &VectorField2D,
        alpha: f64,
        trusted: &TrustedRegion,
    ) -> Result<PressureForce, PressureError> {
        check_alpha(alpha)?;
        u.grid().same_as(v.grid())?;
        self.grid.same_as(u.grid())?;
        let grid = self.grid;
        let tail = tail_bound(u, v, alpha, trusted)?;
        let u = remove_mean(u);
        let v = remove_mean(v);

        let mut force = vec![vec![0.0f64; grid.len()]; 2];
        for j in 0..2 {
            for k in 0..2 {
                let prod: Vec<f64> =
                    u.component(j).iter().zip(v.component(k)).map(|(a, b)| a * b).collect();
                let p_hat = fft2d::forward_padded(&grid, &prod);

                for (l, f) in force.iter_mut().enumerate() {
                    // low-frequency part: Gamma * (u_j v_k)
                    let add =
                        fft2d::convolve(&self.gamma_hats[4 * l + 2 * j + k], &p_hat, &grid);
                    f.par_iter_mut().zip(add.par_iter()).for_each(|(o, &a)| *o += a);

                    // high-frequency part: spectral multiplier on the product
                    let mut hat =
                        fft2d::Doubled { m: p_hat.m, h: p_hat.h, hat: p_hat.hat.clone() };
                    let profile = self.profile;
                    hat.apply_symbol(move |kx, ky| {
                        let kk = [kx, ky];
                        let k2 = kx * kx + ky * ky;
                        if k2 == 0.0 {
                            return Complex::new(0.0, 0.0);
                        }
                        let hi = 1.0 - profile.symbol(k2.sqrt());
                        Complex::new(0.0, -hi * kk[l] * kk[j] * kk[k] / k2)
                    });
                    let m2 = (hat.m * hat.m) as f64;
                    let add = fft2d::inverse_crop(&hat, &grid, 1.0 / m2);
                    f.par_iter_mut().zip(add.par_iter()).for_each(|(o, &a)| *o += a);
                }
            }
        }

        let [f1, f2] = <[Vec<f64>; 2]>::try_from(force).unwrap();
        Ok(PressureForce {
            force: VectorField2D::from_components(
                ScalarField2D::from_data(grid, f1),
                ScalarField2D::from_data(grid, f2),
            )?,
            provenance: Provenance {
                operator: "lowpass".into(),
                theta: Some([self.theta.inner_radius(), self.theta.outer_radius()]),
                lambda: Some(self.profile.lambda()),
            },
            trusted_radius: (trusted.max_radius() - self.theta.outer_radius()).max(0.0),
            tail_bound: tail,
        })
    }
}

/// Low-pass split pressure force: high frequencies through the spectral
/// multiplier `(Id - chi(D)) grad (-lap)^{-1} grad^2 :`, low frequencies
/// through the physical convolution with the composite kernel at scale 1.
pub fn pressure_force_lowpass(
    u: &VectorField2D,
    v: &VectorField2D,
    theta: &CutoffProfile,
    alpha: f64,
    trusted: &TrustedRegion,
) -> Result<PressureForce, PressureError> {
    LowPassOperator::new(u.grid(), theta)?.apply(u, v, alpha, trusted)
}

/// Spectral Leray oracle `grad (-lap)^{-1} d_j d_k (u_j v_k)` on the doubled
/// grid; ground truth for decaying data.
pub fn leray_oracle(
    u: &VectorField2D,
    v: &VectorField2D,
    trusted: &TrustedRegion,
) -> Result<PressureForce, PressureError> {
    u.grid().same_as(v.grid())?;
    let grid = *u.grid();
    let n = grid.n();
    let u = remove_mean(u);
    let v = remove_mean(v);
    let u = &u;
    let v = &v;

    // boundary decay: |u||v| on the outer ring vs its global max
    let ring_width = 4;
    let mut ring = 0.0f64;
    let mut global = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            let a = u.get(ix, iy);
            let b = v.get(ix, iy);
            let val = a[0].hypot(a[1]) * b[0].hypot(b[1]);
            global = global.max(val);
            if ix < ring_width || iy < ring_width || ix >= n - ring_width || iy >= n - ring_width
            {
                ring = ring.max(val);
            }
        }
    }
    if global > 0.0 && ring > 1e-6 * global {
        return Err(PressureError::BoundaryDecay { ring, max: global });
    }

    let mut force = vec![vec![0.0f64; grid.len()]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let prod: Vec<f64> =
                u.component(j).iter().zip(v.component(k)).map(|(a, b)| a * b).collect();
            for (l, f) in force.iter_mut().enumerate() {
                // 4x padding keeps periodic images of the slowly decaying
                // pressure field far from the physical block
                let add = fft2d::apply_multiplier_padded(&grid, 4, &prod, |kx, ky| {
                    let kk = [kx, ky];
                    let k2 = kx * kx + ky * ky;
                    if k2 == 0.0 {
                        return Complex::new(0.0, 0.0);
                    }
                    Complex::new(0.0, -kk[l] * kk[j] * kk[k] / k2)
                });
                f.par_iter_mut().zip(add.par_iter()).for_each(|(o, &a)| *o += a);
            }
        }
    }

    let [f1, f2] = <[Vec<f64>; 2]>::try_from(force).unwrap();
    Ok(PressureForce {
        force: VectorField2D::from_components(
            ScalarField2D::from_data(grid, f1),
            ScalarField2D::from_data(grid, f2),
        )?,
        provenance: Provenance { operator: "leray".into(), theta: None, lambda: None },
        trusted_radius: trusted.max_radius(),
        tail_bound: 0.0,
    })
}

/// Relative l2 distance between two forces inside radius `r_max`.
pub fn relative_l2_distance(a: &PressureForce, b: &PressureForce, r_max: f64) -> f64 {
    let grid = a.grid();
    let n = grid.n();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for iy in 0..n {
        for ix in 0..n {
            if grid.coord(ix).hypot(grid.coord(iy)) > r_max {
                continue;
            }
            let fa = a.force.get(ix, iy);
            let fb = b.force.get(ix, iy);
            num += (fa[0] - fb[0]).powi(2) + (fa[1] - fb[1]).powi(2);
            den += fa[0] * fa[0] + fa[1] * fa[1];
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// l2 norm of the discrete curl of the force inside `r_max`, relative to
/// the l2 norm of its gradient magnitude there.
pub fn relative_curl_l2(force: &PressureForce, r_max: f64) -> f64 {
    let grid = *force.grid();
    let n = grid.n();
    let f = &force.force;
    let curl = crate::diffops::fd4_curl(f);
    let grads = [
        fd4_partial(&ScalarField2D::from_data(grid, f.u1().to_vec()), 0),
        fd4_partial(&ScalarField2D::from_data(grid, f.u1().to_vec()), 1),
        fd4_partial(&ScalarField2D::from_data(grid, f.u2().to_vec()), 0),
        fd4_partial(&ScalarField2D::from_data(grid, f.u2().to_vec()), 1),
    ];
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for iy in 0..n {
        for ix in 0..n {
            if grid.coord(ix).hypot(grid.coord(iy)) > r_max {
                continue;
            }
            let k = grid.idx(ix, iy);
            num += curl.data()[k] * curl.data()[k];
            den += grads.iter().map(|g| g.data()[k] * g.data()[k]).sum::<f64>();
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// Max discrete curl of the force inside `r_max`, relative to the max
/// gradient magnitude of the force there.
pub fn relative_curl(force: &PressureForce, r_max: f64) -> f64 {
    let grid = *force.grid();
    let n = grid.n();
    let f = &force.force;
    let curl = crate::diffops::fd4_curl(f);
    let grads = [
        fd4_partial(&ScalarField2D::from_data(grid, f.u1().to_vec()), 0),
        fd4_partial(&ScalarField2D::from_data(grid, f.u1().to_vec()), 1),
        fd4_partial(&ScalarField2D::from_data(grid, f.u2().to_vec()), 0),
        fd4_partial(&ScalarField2D::from_data(grid, f.u2().to_vec()), 1),
    ];
    let mut max_curl = 0.0f64;
    let mut max_grad = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            if grid.coord(ix).hypot(grid.coord(iy)) > r_max {
                continue;
            }
            let k = grid.idx(ix, iy);
            max_curl = max_curl.max(curl.data()[k].abs());
            max_grad =
                max_grad.max(grads.iter().map(|g| g.data()[k].abs()).fold(0.0, f64::max));
        }
    }
    if max_grad > 0.0 {
        max_curl / max_grad
    } else {
        0.0
    }
}
