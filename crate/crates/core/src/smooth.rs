//! Scalar jets (value + first three derivatives) and the classical
//! `exp(-1/t)` smooth ramp.
//!
//! Kernel tabulation needs exact radial derivatives of cutoff profiles up to
//! third order; finite differences of the ramp are too noisy in the
//! transition zone, so profiles are evaluated as third-order Taylor jets.

/// Value and first three derivatives of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet3 {
    pub const fn constant(v: f64) -> Self {
        Jet3 { v, d1: 0.0, d2: 0.0, d3: 0.0 }
    }

    /// Jet of the identity map at `t`.
    pub const fn variable(t: f64) -> Self {
        Jet3 { v: t, d1: 1.0, d2: 0.0, d3: 0.0 }
    }

    pub fn add(self, o: Jet3) -> Jet3 {
        Jet3 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2, d3: self.d3 + o.d3 }
    }

    pub fn sub(self, o: Jet3) -> Jet3 {
        Jet3 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2, d3: self.d3 - o.d3 }
    }

    pub fn scale(self, c: f64) -> Jet3 {
        Jet3 { v: c * self.v, d1: c * self.d1, d2: c * self.d2, d3: c * self.d3 }
    }

    /// Leibniz product rule through third order.
    pub fn mul(self, o: Jet3) -> Jet3 {
        Jet3 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }

    /// Quotient rule: solves `self = q * o` for the jet of `q`.
    pub fn div(self, o: Jet3) -> Jet3 {
        let v = self.v / o.v;
        let d1 = (self.d1 - v * o.d1) / o.v;
        let d2 = (self.d2 - 2.0 * d1 * o.d1 - v * o.d2) / o.v;
        let d3 = (self.d3 - 3.0 * d2 * o.d1 - 3.0 * d1 * o.d2 - v * o.d3) / o.v;
        Jet3 { v, d1, d2, d3 }
    }

    /// Composition with an affine inner map `t -> a + c*t`: rescales the
    /// derivative slots by powers of `c`.
    pub fn compose_affine(self, c: f64) -> Jet3 {
        Jet3 { v: self.v, d1: self.d1 * c, d2: self.d2 * c * c, d3: self.d3 * c * c * c }
    }
}

/// Jet of `exp(-1/t)` for `t > 0`; identically zero for `t <= 0`.
///
/// Closed-form derivatives keep the transition-zone values exact:
/// f' = f/t^2, f'' = f(1/t^4 - 2/t^3), f''' = f(1/t^6 - 6/t^5 + 6/t^4).
pub fn bump_exp_jet(t: f64) -> Jet3 {
    if t <= 0.0 {
        return Jet3::constant(0.0);
    }
    let f = (-1.0 / t).exp();
    let it = 1.0 / t;
    let it2 = it * it;
    let it3 = it2 * it;
    let it4 = it2 * it2;
    let it5 = it4 * it;
    let it6 = it4 * it2;
    Jet3 {
        v: f,
        d1: f * it2,
        d2: f * (it4 - 2.0 * it3),
        d3: f * (it6 - 6.0 * it5 + 6.0 * it4),
    }
}

/// Jet of the smooth step `q(t) = f(t) / (f(t) + f(1-t))` with
/// `f(t) = exp(-1/t)`.
///
/// `q` is 0 for `t <= 0`, 1 for `t >= 1` and strictly increasing in between;
/// all derivatives vanish at both endpoints.
pub fn smoothstep_jet(t: f64) -> Jet3 {
    if t <= 0.0 {
        return Jet3::constant(0.0);
    }
    if t >= 1.0 {
        return Jet3::constant(1.0);
    }
    let f = bump_exp_jet(t);
    // g(t) = f(1 - t): inner derivative -1 flips odd slots.
    let g = bump_exp_jet(1.0 - t).compose_affine(-1.0);
    f.div(f.add(g))
}

/// Plain value of the smooth step, cheaper than the full jet.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let f = (-1.0 / t).exp();
        let g = (-1.0 / (1.0 - t)).exp();
        f / (f + g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn jets_match_finite_differences() {
        let h = 1e-4;
        // higher derivatives of the ramp blow up toward the endpoints, where
        // finite differences lose accuracy; compare d3 in the middle only
        for &t in &[0.12, 0.3, 0.5, 0.77, 0.9] {
            let j = smoothstep_jet(t);
            let fp = (smoothstep(t + h) - smoothstep(t - h)) / (2.0 * h);
            let fpp = (smoothstep(t + h) - 2.0 * smoothstep(t) + smoothstep(t - h)) / (h * h);
            approx(j.v, smoothstep(t), 0.0);
            approx(j.d1, fp, 1e-5 * (1.0 + fp.abs()));
            approx(j.d2, fpp, 1e-3 * (1.0 + fpp.abs()));
        }
        for &t in &[0.3, 0.5, 0.77] {
            let j = smoothstep_jet(t);
            let fppp = (smoothstep(t + 2.0 * h) - 2.0 * smoothstep(t + h)
                + 2.0 * smoothstep(t - h)
                - smoothstep(t - 2.0 * h))
                / (2.0 * h * h * h);
            approx(j.d3, fppp, 1e-3 * (1.0 + fppp.abs()));
        }
    }

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(2.0), 1.0);
        approx(smoothstep(0.5), 0.5, 1e-15);
        for &t in &[0.1, 0.25, 0.4] {
            approx(smoothstep(t) + smoothstep(1.0 - t), 1.0, 1e-15);
        }
    }

    #[test]
    fn jet_quotient_roundtrip() {
        let a = Jet3 { v: 1.3, d1: -0.2, d2: 0.7, d3: 2.0 };
        let b = Jet3 { v: 0.8, d1: 0.5, d2: -0.1, d3: 0.3 };
        let q = a.div(b);
        let back = q.mul(b);
        approx(back.v, a.v, 1e-14);
        approx(back.d1, a.d1, 1e-14);
        approx(back.d2, a.d2, 1e-13);
        approx(back.d3, a.d3, 1e-13);
    }
}
