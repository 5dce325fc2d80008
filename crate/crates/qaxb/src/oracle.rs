//! Independent reference evaluator for Vθ.
//!
//! Integrates along the ray a = e^{u+iη}, η = π/(2θ), with double-exponential
//! quadrature. On this ray log(1+a^{−θ}) stays on the principal branch and the
//! pole of the shifted integrand is never touched, so no principal value is needed.

use std::f64::consts::PI;

use quadrature::double_exponential;

use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct RayOracle {
    pub theta: f64,
    pub target: f64,
}

impl RayOracle {
    pub fn new(theta: f64) -> Self {
        RayOracle { theta, target: 1e-14 }
    }

    fn log1p_exp_neg(&self, w: C64) -> C64 {
        let t = w * self.theta;
        if t.re >= 0.0 {
            (C64::new(1.0, 0.0) + (-t).exp()).ln()
        } else {
            -t + (C64::new(1.0, 0.0) + t.exp()).ln()
        }
    }

    /// Vθ(z) for Re z = x, Im z ∈ [−π, 0].
    pub fn eval(&self, z: C64) -> C64 {
        let eta = PI / (2.0 * self.theta);
        let big = (-z).exp();
        let g = |u: f64| {
            let w = C64::new(u, eta);
            let a = w.exp();
            self.log1p_exp_neg(w) * a / (a + big)
        };
        let x = z.re;
        let c = -x;
        let lo = 0f64.min(c) - 45.0;
        let hi = 0f64.max(c) + 45.0 / self.theta;
        let mut pts = vec![lo, 0.0, hi, c - 4.0 * eta, c - eta, c, c + eta, c + 4.0 * eta];
        pts.retain(|p| *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut total = C64::new(0.0, 0.0);
        for w in pts.windows(2) {
            let re = double_exponential::integrate(|u| g(u).re, w[0], w[1], self.target).integral;
            let im = double_exponential::integrate(|u| g(u).im, w[0], w[1], self.target).integral;
            total += C64::new(re, im);
        }
        (total / C64::new(0.0, 2.0 * PI)).exp()
    }

    pub fn v(&self, x: f64) -> C64 {
        self.eval(C64::new(x, 0.0))
    }

    pub fn v_shifted(&self, x: f64) -> C64 {
        self.eval(C64::new(x, -PI))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_high_precision_values() {
        let o = RayOracle::new(6.0);
        assert!((o.v(0.0) - C64::new(0.691513055782269377761, -0.722363962059755580586)).norm() < 1e-11);
        assert!((o.v(-2.0) - C64::new(0.991507415966413250908, -0.130050159875357191380)).norm() < 1e-11);
        assert!((o.v_shifted(0.0) - C64::new(0.0154254531387431014124, 0.706938508921012479174)).norm() < 1e-11);
    }
}
