// temporary probes; deleted before finalizing
use num_complex::Complex;
use yudovich::fields::{CutoffProfile, Grid2D, sample_radial};
use yudovich::kernels::{free_space_poisson, gamma_lambda};

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

// signed max error / (h^2 rhs) at the worst point -> effective bias constant
fn poisson_bias(n: usize, l: f64, sigma_frac: f64) -> f64 {
    let grid = Grid2D::new(n, l).unwrap();
    let sigma: f64 = grid.half_width() * sigma_frac;
    let norm = 1.0 / (TWO_PI * sigma * sigma);
    let rhs = sample_radial(grid, |r| norm * (-r * r / (2.0 * sigma * sigma)).exp()).unwrap();
    let sol = free_space_poisson(&rhs).unwrap();
    let exact = |r: f64| -(r.ln() + 0.5 * expint_e1(r * r / (2.0 * sigma * sigma))) / TWO_PI;
    let h = grid.spacing();
    // evaluate right at r = 3 sigma along the x axis
    let target = 3.0 * sigma;
    let ix = ((target + grid.half_width()) / h - 0.5).round() as usize;
    let iy = n / 2;
    let r = grid.coord(ix).hypot(grid.coord(iy));
    let d = sol.get(ix, iy) - exact(r);
    let rho = norm * (-r * r / (2.0 * sigma * sigma)).exp();
    d / (h * h * rho)
}

#[test]
fn poisson_bias_constants() {
    for &(n, l, sf) in &[(256usize, 4.0f64, 1.0/16.0), (512, 4.0, 1.0/16.0),
                         (1024, 4.0, 1.0/16.0), (512, 4.0, 1.0/8.0), (512, 8.0, 1.0/16.0)] {
        println!("n={n} L={l} sigma={:.4}: residual bias constant {:+.6}", l*sf, poisson_bias(n, l, sf));
    }
}

#[test]
fn theta_independence_1024() {
    let grid = Grid2D::new(1024, 8.0).unwrap();
    let g1 = gamma_lambda(&grid, 1.0, &CutoffProfile::unit()).unwrap();
    let g2 = gamma_lambda(&grid, 1.0, &CutoffProfile::new(1.5, 3.0).unwrap()).unwrap();
    for c in [0usize, 1, 3] {
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (a, b) in g1.component(c).iter().zip(g2.component(c)) {
            num += (a - b) * (a - b);
            den += a * a;
        }
        println!("n=1024 L=8 comp {c}: rel {:e}", (num / den).sqrt());
    }
}

#[test]
fn psi_radial_decay() {
    // tabulate psi_1 on a generous fine box and report |psi| on rings
    let m = 2048usize;
    let h = 0.05; // box 102.4
    let box_len = m as f64 * h;
    let chi = CutoffProfile::unit();
    let freq = |p: usize| -> f64 {
        let q = if p <= m / 2 { p as f64 } else { p as f64 - m as f64 };
        TWO_PI * q / box_len
    };
    let mut buf = vec![Complex::new(0.0, 0.0); m * m];
    for py in 0..m {
        for px in 0..m {
            buf[py * m + px] = Complex::new(chi.eval(freq(px).hypot(freq(py))), 0.0);
        }
    }
    yudovich::fft2d::fft2_inplace(&mut buf, m, true);
    let scale = 1.0 / (box_len * box_len);
    let val = |ox: i64, oy: i64| {
        let wrap = |o: i64| (o.rem_euclid(m as i64)) as usize;
        (buf[wrap(oy) * m + wrap(ox)].re * scale).abs()
    };
    println!("psi(0) = {:e}", val(0, 0));
    for &r in &[1.0f64, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 40.0] {
        let k = (r / h).round() as i64;
        println!("r={r:5.1}: |psi| = {:e}", val(k, 0));
    }
}
