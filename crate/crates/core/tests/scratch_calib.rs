// temporary calibration probes; values get frozen into analysis::FROZEN
use yudovich::analysis::*;
use yudovich::fields::{Grid2D, ScalarField2D};
use yudovich::solver::SolverConfig;

#[test]
fn calibrate_energy_constant() {
    let grid = Grid2D::new(512, 24.0).unwrap();
    let alpha = 0.25;
    let spec = FieldSpec::GalileoShift {
        base: Box::new(FieldSpec::PowerRotation { alpha }),
        motion: FrameMotion::Constant([2.0, 0.0]),
    };
    let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.5).collect();
    let diags = analytic_diagnostics(&spec, &grid, &times, alpha).unwrap();
    // bisect the smallest K that passes
    let (mut lo, mut hi) = (0.0f64, 50.0f64);
    assert!(energy_distribution_check(&diags, alpha, hi).unwrap().passed());
    let fails_at_zero = !energy_distribution_check(&diags, alpha, 0.0).unwrap().passed();
    println!("K=0 fails: {fails_at_zero}");
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if energy_distribution_check(&diags, alpha, mid).unwrap().passed() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    println!("minimal K_energy = {hi:.4}");
}

#[test]
fn calibrate_growth_constant() {
    let grid = Grid2D::new(512, 24.0).unwrap();
    let alpha = 0.25;
    let spec = FieldSpec::GalileoShift {
        base: Box::new(FieldSpec::PowerRotation { alpha }),
        motion: FrameMotion::SmoothRamp { velocity: [1.5, -0.5], ramp: 1.0 },
    };
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.4).collect();
    let diags = analytic_diagnostics(&spec, &grid, &times, alpha).unwrap();
    let (mut lo, mut hi) = (0.0f64, 50.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if growth_bound_check(&diags, alpha, mid, 1.0).unwrap().passed() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    println!("minimal C_growth = {hi:.4} (K_growth = 1)");
    for d in &diags {
        println!("  t={:.2} norm={:.4}", d.t, d.morrey_norm);
    }
}

#[test]
fn calibrate_stability_constant() {
    let grid = Grid2D::new(512, 12.0).unwrap();
    let amp = 4.0;
    let omega0 = ScalarField2D::from_fn(grid, |x, y| {
        amp * ((-((x - 1.2f64).powi(2) + y * y) / 0.6).exp()
            + (-((x + 1.2).powi(2) + y * y) / 0.6).exp())
    });
    let pert = ScalarField2D::from_fn(grid, |x, y| {
        amp * (-((x - 0.4f64).powi(2) + (y - 0.9f64).powi(2)) / 0.3).exp()
    });
    let mut config = SolverConfig::new(0.1, 1.0);
    config.cfl_max = 50.0;
    let chk = stability_check(
        &omega0, &pert, &[1e-1, 1e-2, 1e-3], &[0.25, 0.5, 1.0],
        0.3, 0.25, 0.62, &config,
    )
    .unwrap();
    for s in &chk.samples {
        println!("t={} slope={:.4} K={:.3} floor={:.4} -ln(s)/(tK)={:.4}",
                 s.t, s.slope, s.k_of_t, s.floor,
                 -(s.slope.ln()) / (s.t * s.k_of_t).max(1e-12));
    }
    println!("outcome {:?} notes {:?}", chk.report.outcome, chk.report.notes);
}

#[test]
fn energy_scenario_scan() {
    let grid = Grid2D::new(512, 24.0).unwrap();
    let alpha = 0.25;
    for &v in &[0.5f64, 1.0, 2.0, 4.0] {
        for &tmax in &[8.0f64, 16.0, 32.0, 64.0] {
            let spec = FieldSpec::GalileoShift {
                base: Box::new(FieldSpec::PowerRotation { alpha }),
                motion: FrameMotion::Constant([v, 0.0]),
            };
            let times: Vec<f64> = (0..=8).map(|k| k as f64 * tmax / 8.0).collect();
            let diags = analytic_diagnostics(&spec, &grid, &times, alpha).unwrap();
            let zero_pass = energy_distribution_check(&diags, alpha, 0.0).unwrap().passed();
            if !zero_pass {
                let (mut lo, mut hi) = (0.0f64, 50.0f64);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if energy_distribution_check(&diags, alpha, mid).unwrap().passed() { hi = mid; } else { lo = mid; }
                }
                println!("V={v} tmax={tmax}: K_min = {hi:.4}");
            } else {
                println!("V={v} tmax={tmax}: passes with K=0");
            }
        }
    }
}
