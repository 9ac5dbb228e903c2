//! Scenario constructions and the verification experiments that confront
//! operator and simulation outputs with the quantitative claims: energy
//! distribution at large radii, polynomial norm growth, perturbation
//! stability, and the far-field dichotomy.
//!
//! Constants in the underlying inequalities are existential; each one is
//! calibrated once on a designated scenario, frozen, and every other
//! scenario must pass with the frozen value. Checks are deterministic given
//! (seed, config).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::biot_savart::velocity_from_vorticity;
use crate::fields::{CutoffProfile, Grid2D, ScalarField2D, VectorField2D};
use crate::kernels::{self, fit_loglog_slope, KernelTable};
use crate::morrey::{
    morrey_norm_vector, MorreyParams, TrustedRegion, DEFAULT_LADDER_RATIO,
};
use crate::smooth::{smoothstep, Jet3};
use crate::solver::{DiagnosticRecord, SimulationRun};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("spec parameters exceed grid capacity: {0}")]
    Capacity(String),
    #[error("scenario misconfigured: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
    #[error(transparent)]
    Morrey(#[from] crate::morrey::MorreyError),
    #[error(transparent)]
    Kernel(#[from] kernels::KernelError),
    #[error(transparent)]
    BiotSavart(#[from] crate::biot_savart::BiotSavartError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

/// Time law of the frame velocity in a generalized Galilean shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FrameMotion {
    /// g(t) = V: a plain Galilean boost (still in the solution class).
    Constant([f64; 2]),
    /// g(t) = V q(t / ramp): vanishes at t = 0, reaches V by t = ramp;
    /// produces a weak solution that fails the far-field criterion.
    SmoothRamp { velocity: [f64; 2], ramp: f64 },
}

impl FrameMotion {
    /// Frame velocity g(t).
    pub fn g(&self, t: f64) -> [f64; 2] {
        match *self {
            FrameMotion::Constant(v) => v,
            FrameMotion::SmoothRamp { velocity, ramp } => {
                let s = smoothstep(t / ramp);
                [velocity[0] * s, velocity[1] * s]
            }
        }
    }

    /// Frame displacement G(t) = int_0^t g.
    pub fn displacement(&self, t: f64) -> [f64; 2] {
        match *self {
            FrameMotion::Constant(v) => [v[0] * t, v[1] * t],
            FrameMotion::SmoothRamp { velocity, ramp } => {
                // integrate the smooth step numerically (deterministic)
                let n = 512;
                let dt = t / n as f64;
                let mut acc = 0.0;
                for k in 0..n {
                    let tm = (k as f64 + 0.5) * dt;
                    acc += smoothstep(tm / ramp) * dt;
                }
                [velocity[0] * acc, velocity[1] * acc]
            }
        }
    }
}

/// Analytic scenario fields. Every spec samples exactly on any grid and
/// reports its analytic sup-vorticity where derivable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FieldSpec {
    /// Stream function `sum_k 4^(k gamma) psi((x - 2^k e) / 2^(k gamma))`
    /// with an annulus bump psi; the optimality construction for the
    /// sup-norm embedding.
    DyadicBump { gamma: f64, direction: [f64; 2], k_max: usize },
    /// The stationary rotation `u = grad^perp <x>^(1+alpha)`.
    PowerRotation { alpha: f64 },
    /// `v(t, x) = u(t, x - G(t)) + g(t)` over a base spec.
    GalileoShift { base: Box<FieldSpec>, motion: FrameMotion },
    /// Stream-function truncation `grad^perp (chi(x / radius) phi)`, the
    /// operational representation of unbounded data.
    Truncated { base: Box<FieldSpec>, radius: f64 },
    /// Random-phase stream function with `|xi|^(-spectrum)` velocity
    /// amplitudes, band-limited and tapered; deterministic in the seed.
    RandomYudovich { seed: u64, spectrum: f64 },
}

/// Point values of a scenario: velocity, stream function, gradient of the
/// stream function, and vorticity.
#[derive(Debug, Clone, Copy)]
struct PointState {
    u: [f64; 2],
    phi: f64,
    grad_phi: [f64; 2],
    omega: f64,
}

/// Annulus bump profile on [1, 2] built from two smooth steps.
fn annulus_bump(rho: f64) -> Jet3 {
    let w = 0.25;
    let up = crate::smooth::smoothstep_jet((rho - 1.0) / w).compose_affine(1.0 / w);
    let down = crate::smooth::smoothstep_jet((2.0 - rho) / w).compose_affine(-1.0 / w);
    up.mul(down)
}

fn dyadic_point(gamma: f64, e: [f64; 2], k_max: usize, x: f64, y: f64) -> PointState {
    let mut st = PointState { u: [0.0; 2], phi: 0.0, grad_phi: [0.0; 2], omega: 0.0 };
    for k in 0..=k_max {
        let center = 2f64.powi(k as i32);
        let scale = 2f64.powf(k as f64 * gamma);
        let (dx, dy) = (x - center * e[0], y - center * e[1]);
        let rho = dx.hypot(dy) / scale;
        if !(0.99..=2.01).contains(&rho) {
            continue;
        }
        let a = annulus_bump(rho);
        let r = dx.hypot(dy);
        if r < 1e-14 {
            continue;
        }
        let (ux, uy) = (dx / r, dy / r);
        // phi_k = scale^2 A(r / scale)
        st.phi += scale * scale * a.v;
        st.grad_phi[0] += scale * a.d1 * ux;
        st.grad_phi[1] += scale * a.d1 * uy;
        // grad^perp phi
        st.u[0] += -scale * a.d1 * uy;
        st.u[1] += scale * a.d1 * ux;
        // laplacian of a radial profile, scale-free by construction
        st.omega += a.d2 + a.d1 / rho;
    }
    st
}

fn power_rotation_point(alpha: f64, x: f64, y: f64) -> PointState {
    let r2 = x * x + y * y;
    let c = (1.0 + alpha) * (1.0 + r2).powf((alpha - 1.0) / 2.0);
    PointState {
        u: [-c * y, c * x],
        phi: (1.0 + r2).powf((1.0 + alpha) / 2.0),
        grad_phi: [c * x, c * y],
        omega: (1.0 + alpha) * (2.0 + (1.0 + alpha) * r2) * (1.0 + r2).powf((alpha - 3.0) / 2.0),
    }
}

impl FieldSpec {
    pub fn dyadic_bump(gamma: f64, k_max: usize) -> Self {
        FieldSpec::DyadicBump { gamma, direction: [1.0, 0.0], k_max }
    }

    /// Point evaluation at time `t`. Random fields are not pointwise
    /// analytic and are rejected here; use [`build_field`].
    fn eval(&self, x: f64, y: f64, t: f64) -> Result<PointState, AnalysisError> {
        match self {
            FieldSpec::DyadicBump { gamma, direction, k_max } => {
                Ok(dyadic_point(*gamma, *direction, *k_max, x, y))
            }
            FieldSpec::PowerRotation { alpha } => Ok(power_rotation_point(*alpha, x, y)),
            FieldSpec::GalileoShift { base, motion } => {
                let shift = motion.displacement(t);
                let g = motion.g(t);
                let mut st = base.eval(x - shift[0], y - shift[1], t)?;
                st.u[0] += g[0];
                st.u[1] += g[1];
                // stream function of the boosted frame gains a linear part
                st.phi += -g[0] * y + g[1] * x;
                st.grad_phi[0] += g[1];
                st.grad_phi[1] += -g[0];
                Ok(st)
            }
            FieldSpec::Truncated { base, radius } => {
                let chi = CutoffProfile::unit().rescaled(*radius);
                let r = x.hypot(y);
                if r >= chi.outer_radius() {
                    return Ok(PointState {
                        u: [0.0; 2],
                        phi: 0.0,
                        grad_phi: [0.0; 2],
                        omega: 0.0,
                    });
                }
                let st = base.eval(x, y, t)?;
                let j = chi.eval_jet(r);
                let (ux, uy) = if r > 1e-14 { (x / r, y / r) } else { (0.0, 0.0) };
                let grad_chi = [j.d1 * ux, j.d1 * uy];
                let lap_chi = if r > 1e-14 { j.d2 + j.d1 / r } else { 0.0 };
                Ok(PointState {
                    u: [
                        j.v * st.u[0] - grad_chi[1] * st.phi,
                        j.v * st.u[1] + grad_chi[0] * st.phi,
                    ],
                    phi: j.v * st.phi,
                    grad_phi: [
                        j.v * st.grad_phi[0] + grad_chi[0] * st.phi,
                        j.v * st.grad_phi[1] + grad_chi[1] * st.phi,
                    ],
                    omega: j.v * st.omega
                        + 2.0 * (grad_chi[0] * st.grad_phi[0] + grad_chi[1] * st.grad_phi[1])
                        + st.phi * lap_chi,
                })
            }
            FieldSpec::RandomYudovich { .. } => Err(AnalysisError::BadScenario(
                "random fields have no pointwise analytic form".into(),
            )),
        }
    }

    /// Grid capacity preconditions.
    fn check_capacity(&self, grid: &Grid2D) -> Result<(), AnalysisError> {
        match self {
            FieldSpec::DyadicBump { k_max, .. } => {
                let reach = 2f64.powi(*k_max as i32 + 1);
                if reach > grid.half_width() / 2.0 {
                    return Err(AnalysisError::Capacity(format!(
                        "dyadic bump reach {reach} exceeds half the half-width {}",
                        grid.half_width() / 2.0
                    )));
                }
                Ok(())
            }
            FieldSpec::Truncated { base, radius } => {
                if 2.0 * radius > grid.half_width() / 2.0 {
                    return Err(AnalysisError::Capacity(format!(
                        "truncation support {} exceeds the inner half",
                        2.0 * radius
                    )));
                }
                base.check_capacity(grid)
            }
            FieldSpec::GalileoShift { base, .. } => base.check_capacity(grid),
            _ => Ok(()),
        }
    }

    /// Analytic sup-vorticity where derivable (scanned on a fine radial or
    /// bump-local mesh; the formulas are exact).
    pub fn analytic_sup_vorticity(&self) -> Option<f64> {
        match self {
            FieldSpec::PowerRotation { alpha } => Some(2.0 * (1.0 + alpha)),
            FieldSpec::DyadicBump { .. } => {
                let sup = (0..=4000)
                    .map(|i| {
                        let rho = 1.0 + i as f64 / 4000.0;
                        let a = annulus_bump(rho);
                        (a.d2 + a.d1 / rho).abs()
                    })
                    .fold(0.0, f64::max);
                Some(sup)
            }
            FieldSpec::GalileoShift { base, .. } => base.analytic_sup_vorticity(),
            _ => None,
        }
    }
}

/// Analytic metadata reported with a built field.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMetadata {
    pub sup_vorticity: Option<f64>,
    pub spec: FieldSpec,
}

/// Sample a scenario velocity at time `t`.
pub fn build_field_at(
    spec: &FieldSpec,
    grid: &Grid2D,
    t: f64,
) -> Result<(VectorField2D, FieldMetadata), AnalysisError> {
    spec.check_capacity(grid)?;
    if let FieldSpec::RandomYudovich { seed, spectrum } = spec {
        let u = random_yudovich_field(grid, *seed, *spectrum);
        return Ok((u, FieldMetadata { sup_vorticity: None, spec: spec.clone() }));
    }
    let u = VectorField2D::from_fn(*grid, |x, y| {
        spec.eval(x, y, t).map(|s| s.u).unwrap_or([0.0, 0.0])
    });
    Ok((u, FieldMetadata { sup_vorticity: spec.analytic_sup_vorticity(), spec: spec.clone() }))
}

/// Sample a scenario at t = 0.
pub fn build_field(
    spec: &FieldSpec,
    grid: &Grid2D,
) -> Result<(VectorField2D, FieldMetadata), AnalysisError> {
    build_field_at(spec, grid, 0.0)
}

/// Sample the scenario vorticity at t = 0 (solver initial data).
pub fn build_vorticity(spec: &FieldSpec, grid: &Grid2D) -> Result<ScalarField2D, AnalysisError> {
    spec.check_capacity(grid)?;
    Ok(ScalarField2D::from_fn(*grid, |x, y| {
        spec.eval(x, y, 0.0).map(|s| s.omega).unwrap_or(0.0)
    }))
}

/// Divergence-free random-phase field: a stream function with
/// `|xi|^(-spectrum - 1)` amplitudes (so the velocity spectrum decays like
/// `|xi|^(-spectrum)`), synthesized on the grid and tapered.
fn random_yudovich_field(grid: &Grid2D, seed: u64, spectrum: f64) -> VectorField2D {
    use num_complex::Complex;
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = vec![Complex::new(0.0, 0.0); n * n];
    let box_len = 2.0 * grid.half_width();
    let dk = 2.0 * std::f64::consts::PI / box_len;
    // fill conjugate-symmetric coefficients for a real stream function
    for py in 0..n {
        for px in 0..n {
            let sx = if px <= n / 2 { px as f64 } else { px as f64 - n as f64 };
            let sy = if py <= n / 2 { py as f64 } else { py as f64 - n as f64 };
            let k = (sx * sx + sy * sy).sqrt() * dk;
            if k < dk * 0.5 || k > dk * (n as f64 / 4.0) {
                continue;
            }
            let amp: f64 = rng.gen_range(0.5..1.0) * k.powf(-spectrum - 1.0);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            hat[py * n + px] = Complex::from_polar(amp, phase);
        }
    }
    // u = grad^perp psi via spectral derivatives on the synthesis lattice
    let mut u1_hat = hat.clone();
    let mut u2_hat = hat;
    for py in 0..n {
        for px in 0..n {
            let sx = if px <= n / 2 { px as f64 } else { px as f64 - n as f64 };
            let sy = if py <= n / 2 { py as f64 } else { py as f64 - n as f64 };
            let (kx, ky) = (sx * dk, sy * dk);
            let idx = py * n + px;
            let psi = u1_hat[idx];
            u1_hat[idx] = Complex::new(0.0, -ky) * psi;
            u2_hat[idx] = Complex::new(0.0, kx) * u2_hat[idx];
        }
    }
    crate::fft2d::fft2_inplace(&mut u1_hat, n, true);
    crate::fft2d::fft2_inplace(&mut u2_hat, n, true);
    let taper = CutoffProfile::new(grid.half_width() * 0.35, grid.half_width() * 0.45).unwrap();
    let scale = 1.0 / (n * n) as f64;
    VectorField2D::from_fn(*grid, |x, y| {
        let ix = (((x + grid.half_width()) / grid.spacing() - 0.5).round() as usize).min(n - 1);
        let iy = (((y + grid.half_width()) / grid.spacing() - 0.5).round() as usize).min(n - 1);
        let w = taper.eval_point(x, y) * scale;
        [w * u1_hat[iy * n + ix].re, w * u2_hat[iy * n + ix].re]
    })
}

/// Outcome of a quantitative bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckOutcome {
    Pass,
    Fail,
    /// The configuration cannot decide the claim (e.g. no admissible radii
    /// inside the trusted region, or too few samples for a fit).
    Inconclusive,
}

/// One measured comparison point of a bound check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSample {
    /// Abscissa: time or filter scale, depending on the claim.
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// A claim confronted with measurements.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport {
    pub claim: String,
    pub constant: f64,
    pub series: Vec<BoundSample>,
    pub outcome: CheckOutcome,
    pub notes: Vec<String>,
}

impl BoundCheckReport {
    fn conclude(claim: &str, constant: f64, series: Vec<BoundSample>, notes: Vec<String>) -> Self {
        let outcome = if series.is_empty() {
            CheckOutcome::Inconclusive
        } else if series.iter().all(|s| s.pass) {
            CheckOutcome::Pass
        } else {
            CheckOutcome::Fail
        };
        BoundCheckReport { claim: claim.into(), constant, series, outcome, notes }
    }

    pub fn passed(&self) -> bool {
        self.outcome == CheckOutcome::Pass
    }

    /// Aggregate CSV rows: claim, x, lhs, rhs, pass.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for s in &self.series {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.claim, s.x, s.lhs, s.rhs, s.pass as u8
            ));
        }
        out
    }
}

/// Frozen calibration constants; calibrated once on designated scenarios
/// and pinned by regression tests.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrozenConstants {
    /// Constant in the admissible-radius threshold of the energy
    /// distribution bound.
    pub k_energy: f64,
    /// Prefactor and rate constant of the growth envelope.
    pub c_growth: f64,
    pub k_growth: f64,
    /// Rate constant in the stability slope floor `exp(-t C K)`.
    pub c_hat_stability: f64,
}

/// Values frozen from the calibration scenarios with a 1.2-1.5x margin
/// over the measured minima (see `tests/calibration.rs`):
/// * k_energy: boosted steady rotation (V = 1, t to 16) needs K >= 0.0199;
/// * c_growth: the envelope binds at t = 0 where it must cover the initial
///   norm (C >= 1), the dynamic terms are slack at desk scale;
/// * c_hat_stability: measured perturbation slopes sit at 1.0 up to t K of
///   order 10, so any positive rate passes; frozen to the smallest value
///   keeping the floor 5% under the calibration measurements.
pub const FROZEN: FrozenConstants = FrozenConstants {
    k_energy: 0.024,
    c_growth: 1.3,
    k_growth: 1.0,
    c_hat_stability: 0.02,
};

pub mod suite;

/// Large-scale energy distribution: at each diagnostic time the tail norm
/// at every admissible ladder radius `R >= max(R_min(t), 1)` must stay
/// within twice the initial Morrey norm, where
/// `R_min = (K t + (K t)^2 sup|omega_0|)^(1/(1-alpha)) |u_0|^(1/(1-alpha))`.
pub fn energy_distribution_check(
    diagnostics: &[DiagnosticRecord],
    alpha: f64,
    k_energy: f64,
) -> Result<BoundCheckReport, AnalysisError> {
    if diagnostics.is_empty() {
        return Ok(BoundCheckReport::conclude("energy-distribution", k_energy, vec![], vec![]));
    }
    let d0 = &diagnostics[0];
    let u0_norm = d0.morrey_norm;
    let omega0_sup = d0.sup_vorticity;
    let rhs = 2.0 * u0_norm;
    let mut series = Vec::new();
    let mut notes = Vec::new();
    let mut any_admissible = false;
    for d in diagnostics {
        let kt = k_energy * d.t;
        let r_min = (kt + kt * kt * omega0_sup)
            .powf(1.0 / (1.0 - alpha))
            * u0_norm.powf(1.0 / (1.0 - alpha));
        let r_min = r_min.max(1.0);
        // sup of the tail over admissible ladder radii = tail at the first
        // admissible rung (tails are suffix sups)
        let idx = d.radii.partition_point(|&r| r < r_min);
        match d.tail_norms.get(idx) {
            Some(&lhs) => {
                any_admissible = true;
                series.push(BoundSample { x: d.t, lhs, rhs, pass: lhs <= rhs });
            }
            None => {
                notes.push(format!(
                    "t = {}: admissible radius {r_min:.3} beyond the trusted region",
                    d.t
                ));
            }
        }
    }
    if !any_admissible {
        notes.push("no admissible radii inside the trusted region".into());
        return Ok(BoundCheckReport {
            claim: "energy-distribution".into(),
            constant: k_energy,
            series: vec![],
            outcome: CheckOutcome::Inconclusive,
            notes,
        });
    }
    Ok(BoundCheckReport::conclude("energy-distribution", k_energy, series, notes))
}

/// Tail monotonicity at every diagnostic time (the tails are suffix sups by
/// construction; this asserts the recorded tables kept that shape).
pub fn tails_monotone(diagnostics: &[DiagnosticRecord]) -> bool {
    diagnostics.iter().all(|d| d.tail_norms.windows(2).all(|w| w[1] <= w[0] + 1e-14))
}

/// Polynomial growth envelope: the measured Morrey norm must stay under
/// `C (|u_0| + K t^p1 |u_0|^q + K t^p2 sup|omega_0|^e |u_0|^q)` with
/// `p1 = (1+alpha)/(1-alpha)`, `p2 = 2 p1`, `q = 2/(1-alpha)`,
/// `e = (1+alpha)/(1-alpha)`; also fits the empirical growth exponent over
/// the second half of the run.
pub fn growth_bound_check(
    diagnostics: &[DiagnosticRecord],
    alpha: f64,
    c_growth: f64,
    k_growth: f64,
) -> Result<BoundCheckReport, AnalysisError> {
    let claim = "growth-envelope";
    if diagnostics.len() < 8 {
        return Ok(BoundCheckReport {
            claim: claim.into(),
            constant: c_growth,
            series: vec![],
            outcome: CheckOutcome::Inconclusive,
            notes: vec![format!("{} diagnostic times < 8", diagnostics.len())],
        });
    }
    let d0 = &diagnostics[0];
    let u0 = d0.morrey_norm;
    let w0 = d0.sup_vorticity;
    let p1 = (1.0 + alpha) / (1.0 - alpha);
    let p2 = 2.0 * p1;
    let q = 2.0 / (1.0 - alpha);
    let e = (1.0 + alpha) / (1.0 - alpha);
    let mut series = Vec::new();
    for d in diagnostics {
        let envelope = c_growth
            * (u0
                + k_growth * d.t.powf(p1) * u0.powf(q)
                + k_growth * d.t.powf(p2) * w0.powf(e) * u0.powf(q));
        series.push(BoundSample { x: d.t, lhs: d.morrey_norm, rhs: envelope, pass: d.morrey_norm <= envelope });
    }
    // empirical exponent over the second half
    let half = diagnostics.last().unwrap().t / 2.0;
    let pts: Vec<(f64, f64)> = diagnostics
        .iter()
        .filter(|d| d.t >= half && d.t > 0.0 && d.morrey_norm > 0.0)
        .map(|d| (d.t, d.morrey_norm))
        .collect();
    let mut notes = Vec::new();
    if pts.len() >= 3 {
        let slope = fit_loglog_slope(&pts);
        let cap = p2 + 0.2;
        notes.push(format!("empirical growth exponent {slope:.3} (cap {cap:.3})"));
        if slope > cap {
            series.push(BoundSample { x: f64::INFINITY, lhs: slope, rhs: cap, pass: false });
        }
    }
    Ok(BoundCheckReport::conclude(claim, c_growth, series, notes))
}

/// Analytic diagnostics for scenarios with closed-form time dependence:
/// Morrey reports of `u(t)` sampled directly, no PDE solve.
pub fn analytic_diagnostics(
    spec: &FieldSpec,
    grid: &Grid2D,
    times: &[f64],
    alpha: f64,
) -> Result<Vec<DiagnosticRecord>, AnalysisError> {
    let trusted = TrustedRegion::standard(grid);
    let ladder = trusted.ladder(DEFAULT_LADDER_RATIO);
    let params = MorreyParams::new(2.0, alpha)?;
    let sup = spec.analytic_sup_vorticity().unwrap_or(f64::NAN);
    times
        .iter()
        .map(|&t| {
            let (u, _) = build_field_at(spec, grid, t)?;
            let report = morrey_norm_vector(&u, params, &ladder, &trusted)?;
            Ok(DiagnosticRecord {
                t,
                sup_vorticity: sup,
                circulation: f64::NAN,
                center: [f64::NAN; 2],
                morrey_norm: report.norm,
                radii: report.radii.clone(),
                tail_norms: report.tail_norms.clone(),
                ball_energy: report.ball_energy,
            })
        })
        .collect()
}

/// Measured perturbation response at one probe time.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySample {
    pub t: f64,
    /// d log |w| / d log delta fitted over the perturbation ladder.
    pub slope: f64,
    /// The floor exp(-t C K(t)) with the calibrated constant.
    pub floor: f64,
    pub k_of_t: f64,
}

/// Perturbation-ladder stability check: runs the base scenario and
/// `delta`-perturbed variants, measures `|u_delta(t) - u(t)|` in the
/// `L^2_gamma` norm and fits the Holder slope against delta.
pub struct StabilityCheck {
    pub samples: Vec<StabilitySample>,
    pub report: BoundCheckReport,
}

#[allow(clippy::too_many_arguments)]
pub fn stability_check(
    omega0: &ScalarField2D,
    perturbation: &ScalarField2D,
    deltas: &[f64],
    probe_times: &[f64],
    gamma: f64,
    alpha: f64,
    c_hat: f64,
    config: &crate::solver::SolverConfig,
) -> Result<StabilityCheck, AnalysisError> {
    if !(alpha < gamma && gamma < 1.0 - alpha) {
        return Err(AnalysisError::BadScenario(format!(
            "need alpha < gamma < 1 - alpha, got alpha = {alpha}, gamma = {gamma}"
        )));
    }
    let grid = *omega0.grid();
    let trusted = TrustedRegion::standard(&grid);
    let ladder = trusted.ladder(DEFAULT_LADDER_RATIO);
    let params = MorreyParams::new(2.0, gamma)?;
    let mut config = *config;
    config.t_end = probe_times.iter().cloned().fold(0.0, f64::max);
    config.snapshot_interval = 0.0;

    // run base and perturbed variants, capturing states at probe times
    let capture = |om0: &ScalarField2D| -> Result<Vec<ScalarField2D>, AnalysisError> {
        let mut out = Vec::new();
        let mut omega = om0.clone();
        let mut t = 0.0;
        for &tp in probe_times {
            while t < tp - 1e-12 {
                let u = velocity_from_vorticity(&omega)?;
                let h = grid.spacing();
                let vmax = u.max_norm();
                let mut dt =
                    if vmax > 0.0 { config.dt.min(config.cfl_max * h / vmax) } else { config.dt };
                dt = dt.min(tp - t);
                omega = crate::solver::step_with_velocity(&omega, &u, dt);
                t += dt;
            }
            out.push(omega.clone());
        }
        Ok(out)
    };

    let base_states = capture(omega0)?;
    let mut perturbed: Vec<Vec<ScalarField2D>> = Vec::new();
    for &delta in deltas {
        let m0 = ScalarField2D::from_data(
            grid,
            omega0
                .data()
                .iter()
                .zip(perturbation.data())
                .map(|(a, b)| a + delta * b)
                .collect(),
        );
        perturbed.push(capture(&m0)?);
    }

    // K(t): sup over probe times so far of the Yudovich norms of both
    // solutions (measured on the base and the largest perturbation)
    let y_norm = |om: &ScalarField2D| -> Result<f64, AnalysisError> {
        let u = velocity_from_vorticity(om)?;
        let rep = morrey_norm_vector(&u, MorreyParams::new(2.0, alpha)?, &ladder, &trusted)?;
        Ok(rep.norm + om.max_abs())
    };

    let mut samples = Vec::new();
    let mut series = Vec::new();
    let mut running_k = y_norm(omega0)? + y_norm(&{
        let m0 = ScalarField2D::from_data(
            grid,
            omega0
                .data()
                .iter()
                .zip(perturbation.data())
                .map(|(a, b)| a + deltas[deltas.len() - 1] * b)
                .collect(),
        );
        m0
    })?;
    for (ti, &tp) in probe_times.iter().enumerate() {
        running_k = running_k
            .max(y_norm(&base_states[ti])? + y_norm(&perturbed[deltas.len() - 1][ti])?);
        let mut pts = Vec::new();
        for (di, &delta) in deltas.iter().enumerate() {
            let diff = ScalarField2D::from_data(
                grid,
                perturbed[di][ti]
                    .data()
                    .iter()
                    .zip(base_states[ti].data())
                    .map(|(a, b)| a - b)
                    .collect(),
            );
            let w = velocity_from_vorticity(&diff)?;
            let norm = morrey_norm_vector(&w, params, &ladder, &trusted)?.norm;
            if norm > 0.0 {
                pts.push((delta, norm));
            }
        }
        if pts.len() < 2 {
            continue;
        }
        let slope = fit_loglog_slope(&pts);
        let floor = (-tp * c_hat * running_k).exp();
        samples.push(StabilitySample { t: tp, slope, floor, k_of_t: running_k });
        series.push(BoundSample { x: tp, lhs: floor, rhs: slope, pass: floor <= slope });
        series.push(BoundSample { x: tp, lhs: slope, rhs: 1.05, pass: slope <= 1.05 });
    }
    // slope non-increasing within fit tolerance
    let mut notes = Vec::new();
    for w in samples.windows(2) {
        if w[1].slope > w[0].slope + 0.05 {
            series.push(BoundSample {
                x: w[1].t,
                lhs: w[1].slope,
                rhs: w[0].slope + 0.05,
                pass: false,
            });
            notes.push(format!("slope increased at t = {}", w[1].t));
        }
    }
    let report = BoundCheckReport::conclude("holder-stability", c_hat, series, notes);
    Ok(StabilityCheck { samples, report })
}

/// Far-field velocity criterion: RMS of the low-passed difference
/// `u_t - u_0` over the quarter ball, per filter scale.
pub fn velocity_criterion(
    u_t: &VectorField2D,
    u_0: &VectorField2D,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    u_t.grid().same_as(u_0.grid())?;
    let grid = *u_t.grid();
    let n = grid.n();
    let r_max = grid.half_width() / 4.0;
    let d1 = ScalarField2D::from_data(
        grid,
        u_t.u1().iter().zip(u_0.u1()).map(|(a, b)| a - b).collect(),
    );
    let d2 = ScalarField2D::from_data(
        grid,
        u_t.u2().iter().zip(u_0.u2()).map(|(a, b)| a - b).collect(),
    );
    let mut out = Vec::new();
    for &lambda in lambdas {
        let f1 = kernels::low_pass(&d1, lambda)?;
        let f2 = kernels::low_pass(&d2, lambda)?;
        let mut acc = 0.0;
        let mut count = 0usize;
        for iy in 0..n {
            for ix in 0..n {
                if grid.coord(ix).hypot(grid.coord(iy)) > r_max {
                    continue;
                }
                let k = grid.idx(ix, iy);
                acc += f1.data()[k] * f1.data()[k] + f2.data()[k] * f2.data()[k];
                count += 1;
            }
        }
        out.push((lambda, (acc / count as f64).sqrt()));
    }
    Ok(out)
}

/// The two-region split of the composite-kernel convolution
/// `Gamma_lambda * (f (x) f)` at probe point `x`: the far region
/// `|y| >= 3 |x|` and its complement.
fn split_convolution_at(
    gamma: &KernelTable,
    f: &VectorField2D,
    probe: (usize, usize),
) -> ([f64; 2], [f64; 2]) {
    let grid = f.grid();
    let n = grid.n();
    let h2 = grid.spacing() * grid.spacing();
    let (px, py) = probe;
    let (x0, y0) = (grid.coord(px), grid.coord(py));
    let x_norm = x0.hypot(y0);
    let mut far = [0.0f64; 2];
    let mut near = [0.0f64; 2];
    for iy in 0..n {
        let yy = grid.coord(iy);
        let oy = py as isize - iy as isize;
        for ix in 0..n {
            let xx = grid.coord(ix);
            let k = iy * n + ix;
            let (f1, f2) = (f.u1()[k], f.u2()[k]);
            let prods = [f1 * f1, f1 * f2, f2 * f1, f2 * f2];
            let ox = px as isize - ix as isize;
            let into = if xx.hypot(yy) >= 3.0 * x_norm { &mut far } else { &mut near };
            for l in 0..2 {
                let mut acc = 0.0;
                for (jk, p) in prods.iter().enumerate() {
                    acc += gamma.offset_value(4 * l + jk, ox, oy) * p;
                }
                into[l] += acc;
            }
        }
    }
    for v in far.iter_mut().chain(near.iter_mut()) {
        *v *= h2;
    }
    (far, near)
}

/// Decay table of the far-field pressure criterion: per filter scale, the
/// sup of the far contribution and the weighted sup of the near
/// contribution over a set of probe points.
#[derive(Debug, Clone, Serialize)]
pub struct FarFieldDecay {
    pub lambda: f64,
    /// sup |I1| over probes.
    pub i1_sup: f64,
    /// sup over probe radii r of r^(-2 alpha) max_{|x| <= r} |I2|.
    pub i2_weighted: f64,
}

/// Far-field pressure criterion: splits `Gamma_lambda * (f (x) f)` into the
/// far and near contributions and reports their decay across the filter
/// ladder, plus fitted log-log slopes.
pub fn farfield_pressure_diagnostic(
    f: &VectorField2D,
    lambdas: &[f64],
    alpha: f64,
    theta: &CutoffProfile,
) -> Result<(Vec<FarFieldDecay>, Option<(f64, f64)>), AnalysisError> {
    let grid = *f.grid();
    // probe points on rings at dyadic radii, 8 directions
    let mut probes = Vec::new();
    let mut r = 1.0;
    while r <= grid.half_width() / 4.0 {
        for k in 0..8 {
            let ang = std::f64::consts::TAU * k as f64 / 8.0;
            let x = r * ang.cos();
            let y = r * ang.sin();
            let ix = (((x + grid.half_width()) / grid.spacing() - 0.5).round() as usize)
                .min(grid.n() - 1);
            let iy = (((y + grid.half_width()) / grid.spacing() - 0.5).round() as usize)
                .min(grid.n() - 1);
            probes.push((ix, iy));
        }
        r *= 2.0;
    }
    let mut table = Vec::new();
    for &lambda in lambdas {
        let gamma = kernels::gamma_lambda(&grid, lambda, theta)?;
        let mut i1_sup = 0.0f64;
        let mut i2_weighted = 0.0f64;
        for &probe in &probes {
            let (far, near) = split_convolution_at(&gamma, f, probe);
            let r = grid.coord(probe.0).hypot(grid.coord(probe.1)).max(1.0);
            i1_sup = i1_sup.max(far[0].hypot(far[1]));
            i2_weighted = i2_weighted.max(r.powf(-2.0 * alpha) * near[0].hypot(near[1]));
        }
        table.push(FarFieldDecay { lambda, i1_sup, i2_weighted });
    }
    let slopes = if lambdas.len() >= 3 {
        let p1: Vec<(f64, f64)> =
            table.iter().map(|d| (d.lambda, d.i1_sup.max(1e-300))).collect();
        let p2: Vec<(f64, f64)> =
            table.iter().map(|d| (d.lambda, d.i2_weighted.max(1e-300))).collect();
        Some((fit_loglog_slope(&p1), fit_loglog_slope(&p2)))
    } else {
        None
    };
    Ok((table, slopes))
}

/// Convenience: the dichotomy decision from a velocity-criterion series.
/// Decaying: final value <= 0.1x the initial; converged-to-constant:
/// final within 5% of `expected`.
pub fn criterion_decays(series: &[(f64, f64)]) -> bool {
    match (series.first(), series.last()) {
        (Some(&(_, first)), Some(&(_, last))) => last <= 0.1 * first,
        _ => false,
    }
}

pub fn criterion_converges_to(series: &[(f64, f64)], expected: f64) -> bool {
    series
        .last()
        .map(|&(_, v)| (v - expected).abs() <= 0.05 * expected)
        .unwrap_or(false)
}

/// The dichotomy at the diagnostic level: exactly one of the two outcomes
/// holds for every scenario in a suite.
pub fn dichotomy_holds(run_series: &[(f64, f64)], is_galileo_with_drift: bool, g_norm: f64) -> bool {
    if is_galileo_with_drift {
        !criterion_decays(run_series) && criterion_converges_to(run_series, g_norm)
    } else {
        criterion_decays(run_series)
    }
}

/// Deterministic rerun fingerprint of a simulation run (bitwise over the
/// final state and diagnostics).
pub fn run_fingerprint(run: &SimulationRun) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for (t, f) in &run.snapshots {
        t.to_bits().hash(&mut h);
        for v in f.data() {
            v.to_bits().hash(&mut h);
        }
    }
    for d in &run.diagnostics {
        d.t.to_bits().hash(&mut h);
        d.morrey_norm.to_bits().hash(&mut h);
        d.sup_vorticity.to_bits().hash(&mut h);
    }
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rotation_matches_symbolic_values() {
        let grid = Grid2D::new(256, 8.0).unwrap();
        let alpha = 0.25;
        let spec = FieldSpec::PowerRotation { alpha };
        let (u, meta) = build_field(&spec, &grid).unwrap();
        // analytic sup-vorticity attained at the origin: 2 (1 + alpha)
        assert!((meta.sup_vorticity.unwrap() - 2.5).abs() < 1e-12);
        // centered-difference vorticity near the origin approaches it
        let om = crate::morrey::centered_vorticity(&u);
        let c = grid.n() / 2;
        assert!((om.get(c, c) - 2.5).abs() < 1e-2, "{}", om.get(c, c));
    }

    #[test]
    fn galileo_shift_reduces_to_base_at_t0() {
        let grid = Grid2D::new(128, 8.0).unwrap();
        let base = FieldSpec::PowerRotation { alpha: 0.2 };
        let shifted = FieldSpec::GalileoShift {
            base: Box::new(base.clone()),
            motion: FrameMotion::SmoothRamp { velocity: [2.0, -1.0], ramp: 1.0 },
        };
        let (u0, _) = build_field(&base, &grid).unwrap();
        let (v0, _) = build_field_at(&shifted, &grid, 0.0).unwrap();
        let mut dev = 0.0f64;
        for k in 0..grid.len() {
            dev = dev.max((u0.u1()[k] - v0.u1()[k]).abs()).max((u0.u2()[k] - v0.u2()[k]).abs());
        }
        assert!(dev < 1e-13, "shift at t=0 deviates: {dev:e}");
    }

    #[test]
    fn dyadic_bump_has_bounded_growth_profile() {
        let grid = Grid2D::new(512, 20.0).unwrap();
        let alpha = 0.25;
        let gamma = (1.0 + alpha) / 2.0;
        let spec = FieldSpec::dyadic_bump(gamma, 2);
        let (u, meta) = build_field(&spec, &grid).unwrap();
        assert!(meta.sup_vorticity.unwrap().is_finite());

        // sup_{B_r} |u| / r^gamma bounded over the dyadic centers
        let trusted = TrustedRegion::standard(&grid);
        let ladder = RadiusLadder::from_radii(vec![2.0, 4.0, 8.0, 15.0]).unwrap();
        let rep = morrey_norm_vector(
            &u,
            MorreyParams::new(f64::INFINITY, gamma).unwrap(),
            &ladder,
            &trusted,
        )
        .unwrap();
        let qs: Vec<f64> = (0..rep.radii.len()).map(|i| rep.quantity(i)).collect();
        let qmax = qs.iter().cloned().fold(0.0, f64::max);
        let qmin = qs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(qmax.is_finite() && qmax > 0.0);
        // attained growth: the ratio stays within a modest band
        assert!(qmax / qmin < 4.0, "{qs:?}");

        // finite Morrey norm, stable when one more bump is added on a
        // bigger grid
        let l2 = morrey_norm_vector(
            &u,
            MorreyParams::new(2.0, alpha).unwrap(),
            &trusted.ladder(DEFAULT_LADDER_RATIO),
            &trusted,
        )
        .unwrap()
        .norm;
        let grid_big = Grid2D::new(1024, 40.0).unwrap();
        let spec_big = FieldSpec::dyadic_bump(gamma, 3);
        let (u_big, _) = build_field(&spec_big, &grid_big).unwrap();
        let trusted_big = TrustedRegion::standard(&grid_big);
        let l2_big = morrey_norm_vector(
            &u_big,
            MorreyParams::new(2.0, alpha).unwrap(),
            &trusted_big.ladder(DEFAULT_LADDER_RATIO),
            &trusted_big,
        )
        .unwrap()
        .norm;
        assert!((l2_big - l2).abs() / l2 < 0.35, "norm unstable: {l2} vs {l2_big}");
    }

    #[test]
    fn capacity_violations_are_rejected() {
        let grid = Grid2D::new(64, 8.0).unwrap();
        let spec = FieldSpec::dyadic_bump(0.6, 4); // reach 32 > 4
        assert!(matches!(build_field(&spec, &grid), Err(AnalysisError::Capacity(_))));
        let spec = FieldSpec::Truncated {
            base: Box::new(FieldSpec::PowerRotation { alpha: 0.2 }),
            radius: 3.0,
        };
        assert!(matches!(build_field(&spec, &grid), Err(AnalysisError::Capacity(_))));
    }

    #[test]
    fn truncated_field_is_compact_and_matches_base_inside() {
        let grid = Grid2D::new(512, 16.0).unwrap();
        let base = FieldSpec::PowerRotation { alpha: 0.25 };
        let spec = FieldSpec::Truncated { base: Box::new(base.clone()), radius: 3.0 };
        let (u_t, _) = build_field(&spec, &grid).unwrap();
        let (u_b, _) = build_field(&base, &grid).unwrap();
        let n = grid.n();
        for iy in 0..n {
            for ix in 0..n {
                let r = grid.coord(ix).hypot(grid.coord(iy));
                let vt = u_t.get(ix, iy);
                if r < 2.9 {
                    let vb = u_b.get(ix, iy);
                    assert!((vt[0] - vb[0]).abs() + (vt[1] - vb[1]).abs() < 1e-12);
                } else if r > 6.1 {
                    assert_eq!(vt, [0.0, 0.0]);
                }
            }
        }
        // the truncated vorticity integrates the full curl structure
        let om = build_vorticity(&spec, &grid).unwrap();
        let fd = crate::morrey::centered_vorticity(&u_t);
        let scale = om.max_abs();
        let mut max_err = 0.0f64;
        for iy in 2..n - 2 {
            for ix in 2..n - 2 {
                max_err = max_err.max((om.get(ix, iy) - fd.get(ix, iy)).abs());
            }
        }
        // centered differences on the marginally resolved ramp curvature
        assert!(max_err < 0.05 * scale, "analytic vorticity mismatch {max_err:e} vs {scale}");
    }

    #[test]
    fn random_field_is_deterministic_and_finite() {
        let grid = Grid2D::new(128, 8.0).unwrap();
        let spec = FieldSpec::RandomYudovich { seed: 42, spectrum: 1.6 };
        let (a, _) = build_field(&spec, &grid).unwrap();
        let (b, _) = build_field(&spec, &grid).unwrap();
        assert_eq!(a, b);
        assert!(a.max_norm().is_finite() && a.max_norm() > 0.0);
        let (c, _) = build_field(&FieldSpec::RandomYudovich { seed: 43, spectrum: 1.6 }, &grid)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn energy_check_trivial_for_steady_series() {
        // constant-in-time diagnostics pass with any constant
        let d = DiagnosticRecord {
            t: 0.0,
            sup_vorticity: 1.0,
            circulation: 1.0,
            center: [0.0; 2],
            morrey_norm: 1.3,
            radii: vec![1.0, 2.0, 4.0],
            tail_norms: vec![1.3, 1.1, 0.9],
            ball_energy: vec![1.0, 2.0, 3.0],
        };
        let mut d1 = d.clone();
        d1.t = 1.0;
        let rep = energy_distribution_check(&[d.clone(), d1], 0.25, 5.0).unwrap();
        assert_eq!(rep.outcome, CheckOutcome::Pass);
        assert!(tails_monotone(&[d]));
    }

    #[test]
    fn galileo_ball_norm_grows_like_shift_power() {
        // |v(t)|_{L^2(B_1)} for the boosted steady rotation grows like
        // (1 + t |V|)^alpha
        let grid = Grid2D::new(512, 24.0).unwrap();
        let alpha = 0.25;
        let v = [2.0, 0.0];
        let spec = FieldSpec::GalileoShift {
            base: Box::new(FieldSpec::PowerRotation { alpha }),
            motion: FrameMotion::Constant(v),
        };
        let trusted = TrustedRegion::standard(&grid);
        let ladder = RadiusLadder::from_radii(vec![1.0]).unwrap();
        let mut ratios = Vec::new();
        for &t in &[0.0, 2.0, 4.0, 8.0] {
            let (u, _) = build_field_at(&spec, &grid, t).unwrap();
            let rep = morrey_norm_vector(
                &u,
                MorreyParams::new(2.0, alpha).unwrap(),
                &ladder,
                &trusted,
            )
            .unwrap();
            let predicted = (1.0 + t * v[0].hypot(v[1])).powf(alpha);
            ratios.push(rep.norm / predicted);
        }
        // the measured ball norm tracks the predicted power law within a
        // stable constant
        let rmax = ratios.iter().cloned().fold(0.0, f64::max);
        let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(rmax / rmin < 2.0, "ratios {ratios:?}");
    }

    #[test]
    fn growth_check_steady_exponent_near_zero() {
        let mut diags = Vec::new();
        for k in 0..10 {
            diags.push(DiagnosticRecord {
                t: k as f64 * 0.1,
                sup_vorticity: 1.0,
                circulation: 1.0,
                center: [0.0; 2],
                morrey_norm: 2.0,
                radii: vec![1.0],
                tail_norms: vec![2.0],
                ball_energy: vec![1.0],
            });
        }
        let rep = growth_bound_check(&diags, 0.25, 2.0, 1.0).unwrap();
        assert_eq!(rep.outcome, CheckOutcome::Pass);
        let exp_note = rep.notes.iter().find(|n| n.contains("exponent")).unwrap();
        assert!(exp_note.contains("0.000"), "{exp_note}");
    }

    #[test]
    fn velocity_criterion_sees_constants() {
        let grid = Grid2D::new(128, 16.0).unwrap();
        let u0 = VectorField2D::zeros(grid);
        let g = [0.3, -0.4];
        let ut = VectorField2D::from_fn(grid, |_, _| g);
        let series = velocity_criterion(&ut, &u0, &[1.0, 2.0, 4.0]).unwrap();
        for &(_, v) in &series {
            assert!((v - 0.5).abs() < 1e-9, "constant RMS {v}");
        }
        assert!(criterion_converges_to(&series, 0.5));
        assert!(!criterion_decays(&series));
    }
}
