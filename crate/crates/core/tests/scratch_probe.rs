// temporary probes; deleted before finalizing
use yudovich::fields::{CutoffProfile, Grid2D, ScalarField2D, sample_radial};
use yudovich::kernels::{free_space_poisson, gamma_lambda, low_pass};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn expint_e1(x: f64) -> f64 {
    let (a, b) = (x, x + 60.0);
    let n = 20_000usize;
    let h = (b - a) / n as f64;
    let f = |t: f64| (-t).exp() / t;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let t = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
    }
    s * h / 3.0
}

#[test]
fn poisson_error_scaling() {
    for &n in &[128usize, 256, 512] {
        let grid = Grid2D::new(n, 4.0).unwrap();
        let sigma: f64 = grid.half_width() / 16.0;
        let norm = 1.0 / (TWO_PI * sigma * sigma);
        let rhs = sample_radial(grid, |r| norm * (-r * r / (2.0 * sigma * sigma)).exp()).unwrap();
        let sol = free_space_poisson(&rhs).unwrap();
        let exact = |r: f64| -(r.ln() + 0.5 * expint_e1(r * r / (2.0 * sigma * sigma))) / TWO_PI;
        let nn = grid.n();
        let mut max_err = 0.0f64;
        let mut max_err_signed = 0.0f64;
        let mut sup = 0.0f64;
        let mut at_r = 0.0;
        for iy in 0..nn {
            for ix in 0..nn {
                let r = grid.coord(ix).hypot(grid.coord(iy));
                if r < 3.0 * sigma || r > grid.half_width() / 2.0 {
                    continue;
                }
                let e = exact(r);
                sup = sup.max(e.abs());
                let d = sol.get(ix, iy) - e;
                if d.abs() > max_err { max_err = d.abs(); max_err_signed = d; at_r = r; }
            }
        }
        println!("n={n}: rel {:e} (signed {:+e} at r={at_r:.3}, rhs(r)={:e})",
                 max_err / sup, max_err_signed / sup,
                 norm * (-at_r*at_r/(2.0*sigma*sigma)).exp());
    }
}

#[test]
fn theta_independence_scaling() {
    for &(n, l) in &[(512usize, 8.0f64), (512, 16.0), (1024, 16.0)] {
        let grid = Grid2D::new(n, l).unwrap();
        let g1 = gamma_lambda(&grid, 1.0, &CutoffProfile::unit()).unwrap();
        let g2 = gamma_lambda(&grid, 1.0, &CutoffProfile::new(1.5, 3.0).unwrap()).unwrap();
        let c = 0;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (a, b) in g1.component(c).iter().zip(g2.component(c)) {
            num += (a - b) * (a - b);
            den += a * a;
        }
        println!("n={n} L={l}: rel {:e}", (num / den).sqrt());
    }
}

#[test]
fn idempotence_zero_mean() {
    let grid = Grid2D::new(256, 16.0).unwrap();
    let bump = CutoffProfile::new(0.5, 1.5).unwrap();
    let field = ScalarField2D::from_fn(grid, |x, y| {
        bump.eval_point(x - 3.0, y) - bump.eval_point(x + 3.0, y)
    });
    let a = low_pass(&low_pass(&field, 2.0).unwrap(), 4.0).unwrap();
    let b = low_pass(&field, 4.0).unwrap();
    let n = grid.n();
    let mut diff = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            if grid.coord(ix).abs() < 8.0 && grid.coord(iy).abs() < 8.0 {
                diff = diff.max((a.get(ix, iy) - b.get(ix, iy)).abs());
            }
        }
    }
    println!("zero-mean idempotence diff {diff:e}");
}

#[test]
fn velocity_bias_fit() {
    use yudovich::biot_savart::velocity_from_vorticity;
    for &n in &[128usize, 256, 512] {
        let grid = Grid2D::new(n, 4.0).unwrap();
        let (w0, s) = (1.3f64, 0.25f64);
        let omega = yudovich::fields::sample_radial(grid, |r| w0 * (-r * r / (2.0 * s * s)).exp()).unwrap();
        let u = velocity_from_vorticity(&omega).unwrap();
        let h = grid.spacing();
        // fit err = c h^2 gradperp(omega) over r < 1.5
        let (mut sxy, mut sxx, mut max_err) = (0.0f64, 0.0f64, 0.0f64);
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = (grid.coord(ix), grid.coord(iy));
                let r2 = x * x + y * y;
                if r2 > 2.25 || r2 < 1e-12 { continue; }
                let ut_over_r = w0 * s * s / r2 * (1.0 - (-r2 / (2.0 * s * s)).exp());
                let want = [-ut_over_r * y, ut_over_r * x];
                let got = u.get(ix, iy);
                let err = [got[0] - want[0], got[1] - want[1]];
                max_err = max_err.max(err[0].hypot(err[1]));
                // analytic gradperp omega = (-d2, d1) omega; omega radial:
                // grad omega = omega'(r) (x, y)/r, omega' = -r/s^2 * omega
                let c = -w0 / (s * s) * (-r2 / (2.0 * s * s)).exp();
                let gp = [-c * y, c * x];
                sxy += err[0] * gp[0] + err[1] * gp[1];
                sxx += gp[0] * gp[0] + gp[1] * gp[1];
            }
        }
        let c_fit = sxy / sxx / (h * h);
        println!("n={n}: max_err={max_err:e} c_fit={c_fit:+.6}");
    }
}
