// temporary diagnostics; deleted before finalizing
use num_complex::Complex;
use yudovich::fields::{CutoffProfile, DyadicPartition, DyadicCell, Grid2D};
use yudovich::kernels::gamma_lambda;

#[test]
fn dyadic_debug() {
    let g = Grid2D::new(64, 16.0).unwrap();
    let part = DyadicPartition::covering(&g, 2.0).unwrap();
    println!("k_max = {}", part.k_max());
    for k in 0..400 {
        let r = 0.1 + k as f64 * 0.06;
        match part.classify(r) {
            DyadicCell::Core => assert!(r < 2.0, "core fail at {r}"),
            DyadicCell::Annulus(k) => {
                let (lo, hi) = part.annulus_bounds(k);
                if !(lo <= r && (r < hi || k == part.k_max())) {
                    println!("FAIL r={r} k={k} lo={lo} hi={hi}");
                }
            }
        }
    }
}

#[test]
fn gamma_direct_vs_assembled() {
    let grid = Grid2D::new(128, 16.0).unwrap();
    let theta = CutoffProfile::unit();
    let lambda = 1.0;
    let g = gamma_lambda(&grid, lambda, &theta).unwrap();

    // direct spectral construction of the same kernel:
    // symbol -i xi_l xi_j xi_k / |xi|^2 * chi(lambda |xi|)
    let n = grid.n();
    let m = 2 * n;
    let h = grid.spacing();
    let box_len = m as f64 * h;
    let freq = |p: usize| -> f64 {
        let q = if p <= m / 2 { p as f64 } else { p as f64 - m as f64 };
        2.0 * std::f64::consts::PI * q / box_len
    };
    let chi = CutoffProfile::unit();
    for comp in [0usize, 3, 5] {
        let l = comp / 4; let j = (comp / 2) % 2; let k = comp % 2;
        let mut buf = vec![Complex::new(0.0, 0.0); m * m];
        for py in 0..m {
            for px in 0..m {
                let kx = freq(px); let ky = freq(py);
                let kv = [kx, ky];
                let k2 = kx * kx + ky * ky;
                if k2 > 0.0 {
                    let sym = chi.eval(lambda * k2.sqrt());
                    buf[py * m + px] = Complex::new(0.0, -kv[l] * kv[j] * kv[k] / k2 * sym);
                }
            }
        }
        yudovich::fft2d::fft2_inplace(&mut buf, m, true);
        let scale = 1.0 / (box_len * box_len);
        // compare at several offsets
        for &(ox, oy) in &[(0isize, 0isize), (2, 3), (5, -1), (20, 11), (-8, 40)] {
            let wrap = |o: isize| (o.rem_euclid(m as isize)) as usize;
            let direct = buf[wrap(oy) * m + wrap(ox)].re * scale;
            let mine = g.offset_value(comp, ox, oy);
            println!("comp {comp} off ({ox},{oy}): direct {direct:+.6e} assembled {mine:+.6e}");
        }
    }
}

#[test]
fn gamma_term_by_term() {
    let grid = Grid2D::new(128, 16.0).unwrap();
    let theta = CutoffProfile::unit();
    let lambda = 1.0;
    let n = grid.n();
    let m = 2 * n;
    let h = grid.spacing();
    let box_len = m as f64 * h;
    let freq = |p: usize| -> f64 {
        let q = if p <= m / 2 { p as f64 } else { p as f64 - m as f64 };
        2.0 * std::f64::consts::PI * q / box_len
    };
    let chi = CutoffProfile::unit();
    // tabulate psi and dd_00 psi physically, exactly as gamma_lambda does
    let tab = |sym: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); m * m];
        for py in 0..m {
            for px in 0..m {
                buf[py * m + px] = Complex::new(sym(freq(px), freq(py)), 0.0);
            }
        }
        yudovich::fft2d::fft2_inplace(&mut buf, m, true);
        let scale = 1.0 / (box_len * box_len);
        buf.iter().map(|v| v.re * scale).collect()
    };
    let psi = tab(&|kx, ky| chi.eval(lambda * kx.hypot(ky)));
    let dd00 = tab(&|kx, ky| -kx * kx * chi.eval(lambda * kx.hypot(ky)));
    println!("psi(0) = {:.6e} (expect ~ (1/4pi^2) * int chi ~ 0.3/lambda^2-ish)", psi[0]);
    let psi_sum: f64 = psi.iter().sum::<f64>() * h * h;
    println!("int psi = {:.6e} (expect chi(0) = 1)", psi_sum);

    let (near, far) = yudovich::kernels::tabulate_split_kernels(&grid, &theta).unwrap();
    // direct real-space circular convolution at offset (2,3), comp (0,0,0)
    let wrap = |o: isize| (o.rem_euclid(m as isize)) as usize;
    let target = (2isize, 3isize);
    let mut near_sum = 0.0;
    let mut far_sum = 0.0;
    for jy in 0..m as isize {
        for jx in 0..m as isize {
            let a = dd00[wrap(target.1 - jy) * m + wrap(target.0 - jx)];
            let b = near.component(0)[jy as usize * m + jx as usize];
            near_sum += a * b;
            let p = psi[wrap(target.1 - jy) * m + wrap(target.0 - jx)];
            let c = far.component(0)[jy as usize * m + jx as usize];
            far_sum += p * c;
        }
    }
    near_sum *= h * h;
    far_sum *= h * h;
    println!("direct-sum near {near_sum:+.6e} far {far_sum:+.6e} total {:+.6e}", near_sum + far_sum);
    let g = gamma_lambda(&grid, lambda, &theta).unwrap();
    println!("assembled {:+.6e}", g.offset_value(0, 2, 3));
}
