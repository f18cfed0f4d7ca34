//! Numerical inversion of Laplace transforms.

use num_complex::Complex64;
use std::f64::consts::{LN_10, PI};

/// Recovers `f(t)` from its Laplace transform `F(s) = ∫ e^{-st} f(t) dt`.
///
/// `transform` must be analytic in the plane cut along the negative real axis.
pub trait LaplaceInverter: Send + Sync + std::fmt::Debug {
    fn invert(&self, transform: &dyn Fn(Complex64) -> Complex64, t: f64) -> f64;
    fn name(&self) -> &'static str;
}

/// Fixed Talbot contour (Abate & Valkó) with `m` nodes.
#[derive(Debug, Clone, Copy)]
pub struct FixedTalbot {
    pub m: usize,
}

impl Default for FixedTalbot {
    fn default() -> Self {
        Self { m: 24 }
    }
}

impl LaplaceInverter for FixedTalbot {
    fn invert(&self, transform: &dyn Fn(Complex64) -> Complex64, t: f64) -> f64 {
        let m = self.m as f64;
        let r = 2.0 * m / (5.0 * t);
        let mut sum = 0.5 * (transform(Complex64::new(r, 0.0)) * (r * t).exp()).re;
        for k in 1..self.m {
            let theta = k as f64 * PI / m;
            let cot = theta.cos() / theta.sin();
            let s = Complex64::new(r * theta * cot, r * theta);
            let sigma = theta + (theta * cot - 1.0) * cot;
            sum += ((s * t).exp() * transform(s) * Complex64::new(1.0, sigma)).re;
        }
        r / m * sum
    }

    fn name(&self) -> &'static str {
        "talbot"
    }
}

/// Euler summation on the Bromwich line (Abate & Whitt) with `2m + 1` terms.
#[derive(Debug, Clone)]
pub struct EulerInversion {
    m: usize,
    eta: Vec<f64>,
}

impl EulerInversion {
    pub fn new(m: usize) -> Self {
        let mut xi = vec![1.0; 2 * m + 1];
        xi[0] = 0.5;
        let scale = 0.5_f64.powi(m as i32);
        xi[2 * m] = scale;
        let mut binom = 1.0;
        for j in 1..m {
            binom = binom * (m - j + 1) as f64 / j as f64;
            xi[2 * m - j] = xi[2 * m - j + 1] + scale * binom;
        }
        let eta = xi
            .iter()
            .enumerate()
            .map(|(k, x)| if k % 2 == 0 { *x } else { -*x })
            .collect();
        Self { m, eta }
    }
}

impl Default for EulerInversion {
    fn default() -> Self {
        Self::new(18)
    }
}

impl LaplaceInverter for EulerInversion {
    fn invert(&self, transform: &dyn Fn(Complex64) -> Complex64, t: f64) -> f64 {
        let a = self.m as f64 * LN_10 / 3.0;
        let mut sum = 0.0;
        for (k, eta) in self.eta.iter().enumerate() {
            let s = Complex64::new(a, PI * k as f64) / t;
            sum += eta * transform(s).re;
        }
        10_f64.powf(self.m as f64 / 3.0) / t * sum
    }

    fn name(&self) -> &'static str {
        "euler"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(inv: &dyn LaplaceInverter, tol: f64) {
        // 1/(s+1) <-> e^{-t}; s^{-3/2} <-> 2 sqrt(t/π)
        for t in [0.1, 1.0, 5.0] {
            let got = inv.invert(&|s| 1.0 / (s + 1.0), t);
            assert!((got - (-t).exp()).abs() < tol, "{} t={t}: {got}", inv.name());
            let got = inv.invert(&|s| s.powf(-1.5), t);
            let want = 2.0 * (t / PI).sqrt();
            assert!((got - want).abs() < tol * want.max(1.0), "{} t={t}", inv.name());
        }
    }

    #[test]
    fn talbot_known_pairs() {
        check(&FixedTalbot::default(), 1e-10);
    }

    #[test]
    fn euler_known_pairs() {
        check(&EulerInversion::default(), 1e-8);
    }
}
