//! Plan-cached 2D FFTs and domain-doubled free-space convolution.
//!
//! All convolutions zero-pad the `n x n` physical grid into a `2n x 2n`
//! buffer and store kernels in wrapped displacement layout, so the circular
//! product equals the exact linear convolution on the physical block. No
//! periodic wraparound ever touches the physical domain.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::fields::Grid2D;

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], m: usize) {
    dst.par_chunks_mut(m).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * m + j];
        }
    });
}

/// Unnormalized 2D FFT over an `m x m` complex buffer, rows then columns.
pub fn fft2_inplace(data: &mut Vec<Complex<f64>>, m: usize, inverse: bool) {
    assert_eq!(data.len(), m * m);
    let p = plan(m, inverse);
    let scratch_len = p.get_inplace_scratch_len();
    let run_rows = |buf: &mut [Complex<f64>]| {
        buf.par_chunks_mut(m).for_each_init(
            || vec![Complex::default(); scratch_len],
            |scratch, row| p.process_with_scratch(row, scratch),
        );
    };
    run_rows(data);
    let mut tmp = vec![Complex::default(); m * m];
    transpose(data, &mut tmp, m);
    run_rows(&mut tmp);
    transpose(&tmp, data, m);
}

/// Spectral coefficients of a field on the doubled grid.
pub struct Doubled {
    pub m: usize,
    pub h: f64,
    pub hat: Vec<Complex<f64>>,
}

impl Doubled {
    /// Signed frequency for index `p` (angular, box length `m * h`).
    pub fn freq(&self, p: usize) -> f64 {
        let q = if p <= self.m / 2 { p as f64 } else { p as f64 - self.m as f64 };
        2.0 * std::f64::consts::PI * q / (self.m as f64 * self.h)
    }

    pub fn mul_assign(&mut self, other: &Doubled) {
        assert_eq!(self.m, other.m);
        self.hat
            .par_iter_mut()
            .zip(other.hat.par_iter())
            .for_each(|(a, b)| *a *= b);
    }

    /// Multiply by a scalar symbol evaluated at the signed frequency pair.
    pub fn apply_symbol(&mut self, sym: impl Fn(f64, f64) -> Complex<f64> + Sync) {
        let m = self.m;
        let freqs: Vec<f64> = (0..m).map(|p| self.freq(p)).collect();
        self.hat.par_chunks_mut(m).enumerate().for_each(|(py, row)| {
            let ky = freqs[py];
            for (px, v) in row.iter_mut().enumerate() {
                *v *= sym(freqs[px], ky);
            }
        });
    }
}

/// Zero-pad physical data into the doubled grid and transform.
pub fn forward_padded(grid: &Grid2D, data: &[f64]) -> Doubled {
    let n = grid.n();
    assert_eq!(data.len(), n * n);
    let m = 2 * n;
    let mut buf = vec![Complex::default(); m * m];
    buf.par_chunks_mut(m).take(n).enumerate().for_each(|(iy, row)| {
        for ix in 0..n {
            row[ix] = Complex::new(data[iy * n + ix], 0.0);
        }
    });
    fft2_inplace(&mut buf, m, false);
    Doubled { m, h: grid.spacing(), hat: buf }
}

/// Tabulate a displacement kernel on the doubled grid (wrapped layout:
/// index `i` encodes the signed lattice offset `i <= n ? i : i - 2n`) and
/// transform it. `f` receives physical displacements.
pub fn forward_wrapped_kernel(
    grid: &Grid2D,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Doubled {
    let n = grid.n();
    let m = 2 * n;
    let h = grid.spacing();
    let offset = |i: usize| -> f64 {
        let s = if i <= n { i as isize } else { i as isize - m as isize };
        s as f64 * h
    };
    let mut buf = vec![Complex::default(); m * m];
    buf.par_chunks_mut(m).enumerate().for_each(|(iy, row)| {
        let dy = offset(iy);
        for (ix, v) in row.iter_mut().enumerate() {
            // zero the ambiguous Nyquist row/column (offset +-n h); exact
            // linear convolution on the physical block never reads it
            let val = if ix == n || iy == n { 0.0 } else { f(offset(ix), dy) };
            *v = Complex::new(val, 0.0);
        }
    });
    fft2_inplace(&mut buf, m, false);
    Doubled { m, h, hat: buf }
}

/// Like [`forward_wrapped_kernel`], but tabulated on an `over`-times finer
/// displacement lattice and decimated in frequency, which removes the
/// aliasing of marginally resolved kernel features (cutoff transitions).
/// The returned spectrum lives on the standard doubled lattice.
pub fn forward_wrapped_kernel_oversampled(
    grid: &Grid2D,
    over: usize,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Doubled {
    assert!(over.is_power_of_two());
    if over == 1 {
        return forward_wrapped_kernel(grid, f);
    }
    let n = grid.n();
    let m = 2 * n;
    let mf = over * m;
    let h = grid.spacing();
    let hf = h / over as f64;
    let offset = |i: usize| -> f64 {
        let s = if i <= mf / 2 { i as isize } else { i as isize - mf as isize };
        s as f64 * hf
    };
    let mut buf = vec![Complex::default(); mf * mf];
    buf.par_chunks_mut(mf).enumerate().for_each(|(iy, row)| {
        let dy = offset(iy);
        for (ix, v) in row.iter_mut().enumerate() {
            let val = if ix == mf / 2 || iy == mf / 2 { 0.0 } else { f(offset(ix), dy) };
            *v = Complex::new(val, 0.0);
        }
    });
    fft2_inplace(&mut buf, mf, false);
    // the fine box has the same physical size, so its frequency lattice
    // contains the coarse one; pick the matching signed frequencies
    let scale = 1.0 / (over * over) as f64;
    let pick = |p: usize| -> usize {
        // coarse index p encodes signed frequency p <= n ? p : p - m
        let s = if p <= n { p as isize } else { p as isize - m as isize };
        s.rem_euclid(mf as isize) as usize
    };
    let mut hat = vec![Complex::default(); m * m];
    hat.par_chunks_mut(m).enumerate().for_each(|(py, row)| {
        let fy = pick(py);
        for (px, v) in row.iter_mut().enumerate() {
            *v = buf[fy * mf + pick(px)] * scale;
        }
    });
    Doubled { m, h, hat }
}

/// Inverse transform and crop the physical block, taking real parts and
/// applying `scale`.
pub fn inverse_crop(d: &Doubled, grid: &Grid2D, scale: f64) -> Vec<f64> {
    let n = grid.n();
    let m = d.m;
    assert_eq!(m, 2 * n);
    let mut buf = d.hat.clone();
    fft2_inplace(&mut buf, m, true);
    let mut out = vec![0.0f64; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        for (ix, v) in row.iter_mut().enumerate() {
            *v = buf[iy * m + ix].re * scale;
        }
    });
    out
}

/// Exact linear convolution `(kernel * src) h^2` on the physical block.
pub fn convolve(kernel_hat: &Doubled, src_hat: &Doubled, grid: &Grid2D) -> Vec<f64> {
    let m = kernel_hat.m;
    assert_eq!(m, src_hat.m);
    let mut prod = Doubled { m, h: kernel_hat.h, hat: kernel_hat.hat.clone() };
    prod.mul_assign(src_hat);
    let h = grid.spacing();
    let norm = h * h / (m as f64 * m as f64);
    inverse_crop(&prod, grid, norm)
}

/// Apply a Fourier-multiplier symbol to physical data on a `pad`-times
/// enlarged grid (pad >= 2), pushing periodic images far from the physical
/// block; used by oracles that need free-space semantics to high accuracy.
pub fn apply_multiplier_padded(
    grid: &Grid2D,
    pad: usize,
    data: &[f64],
    sym: impl Fn(f64, f64) -> Complex<f64> + Sync,
) -> Vec<f64> {
    assert!(pad >= 2 && pad.is_power_of_two());
    let n = grid.n();
    let m = pad * n;
    let h = grid.spacing();
    let mut buf = vec![Complex::default(); m * m];
    buf.par_chunks_mut(m).take(n).enumerate().for_each(|(iy, row)| {
        for ix in 0..n {
            row[ix] = Complex::new(data[iy * n + ix], 0.0);
        }
    });
    fft2_inplace(&mut buf, m, false);
    let freqs: Vec<f64> = (0..m)
        .map(|p| {
            let q = if p <= m / 2 { p as f64 } else { p as f64 - m as f64 };
            2.0 * std::f64::consts::PI * q / (m as f64 * h)
        })
        .collect();
    buf.par_chunks_mut(m).enumerate().for_each(|(py, row)| {
        let ky = freqs[py];
        for (px, v) in row.iter_mut().enumerate() {
            *v *= sym(freqs[px], ky);
        }
    });
    fft2_inplace(&mut buf, m, true);
    let scale = 1.0 / (m as f64 * m as f64);
    let mut out = vec![0.0f64; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        for (ix, v) in row.iter_mut().enumerate() {
            *v = buf[iy * m + ix].re * scale;
        }
    });
    out
}

/// Apply a Fourier-multiplier symbol to physical data via the doubled grid.
pub fn apply_multiplier(
    grid: &Grid2D,
    data: &[f64],
    sym: impl Fn(f64, f64) -> Complex<f64> + Sync,
) -> Vec<f64> {
    let mut hat = forward_padded(grid, data);
    hat.apply_symbol(sym);
    let m = hat.m;
    inverse_crop(&hat, grid, 1.0 / (m as f64 * m as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_roundtrip() {
        let m = 32;
        let orig: Vec<Complex<f64>> = (0..m * m)
            .map(|k| Complex::new((k as f64 * 0.13).sin(), (k as f64 * 0.07).cos()))
            .collect();
        let mut buf = orig.clone();
        fft2_inplace(&mut buf, m, false);
        fft2_inplace(&mut buf, m, true);
        let scale = 1.0 / (m * m) as f64;
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a * scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let grid = Grid2D::new(16, 1.0).unwrap();
        let n = grid.n();
        let h = grid.spacing();
        let kernel = |dx: f64, dy: f64| (-(dx * dx + dy * dy) / 0.1).exp();
        let src: Vec<f64> = (0..n * n).map(|k| ((k * 37 % 101) as f64 - 50.0) / 50.0).collect();

        let k_hat = forward_wrapped_kernel(&grid, kernel);
        let s_hat = forward_padded(&grid, &src);
        let fast = convolve(&k_hat, &s_hat, &grid);

        for &(ix, iy) in &[(0usize, 0usize), (5, 11), (15, 15), (8, 3)] {
            let x = grid.coord(ix);
            let y = grid.coord(iy);
            let mut direct = 0.0;
            for jy in 0..n {
                for jx in 0..n {
                    direct += kernel(x - grid.coord(jx), y - grid.coord(jy)) * src[jy * n + jx];
                }
            }
            direct *= h * h;
            assert!(
                (fast[iy * n + ix] - direct).abs() < 1e-12,
                "mismatch at ({ix},{iy}): {} vs {direct}",
                fast[iy * n + ix]
            );
        }
    }

    #[test]
    fn multiplier_identity_and_derivative() {
        let grid = Grid2D::new(32, 4.0).unwrap();
        let n = grid.n();
        // compactly supported smooth bump
        let f: Vec<f64> = (0..n * n)
            .map(|k| {
                let x = grid.coord(k % n);
                let y = grid.coord(k / n);
                (-(x * x + y * y) * 2.0).exp()
            })
            .collect();
        let id = apply_multiplier(&grid, &f, |_, _| Complex::new(1.0, 0.0));
        for (a, b) in id.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
        // spectral d/dx of the Gaussian ~ -4x f, tested away from the pad edge
        let ddx = apply_multiplier(&grid, &f, |kx, _| Complex::new(0.0, kx));
        for &(ix, iy) in &[(16usize, 16usize), (18, 14), (12, 17)] {
            let x = grid.coord(ix);
            let expect = -4.0 * x * f[iy * n + ix];
            assert!((ddx[iy * n + ix] - expect).abs() < 1e-6);
        }
    }
}
