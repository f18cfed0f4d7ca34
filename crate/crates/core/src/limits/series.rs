//! Power-series helpers for pgf coefficient extraction.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// First `len` coefficients of `A(z)^p` given the coefficients of `A`
/// (`a[0] != 0`), by the J.C.P. Miller recurrence
/// `c_m = 1/(m a_0) Σ_{j=1}^m (j(p+1) - m) a_j c_{m-j}`.
pub fn series_pow(a: &[f64], p: f64, len: usize) -> Vec<f64> {
    assert!(a[0] != 0.0, "series_pow needs a nonzero constant term");
    let mut c = Vec::with_capacity(len);
    if len == 0 {
        return c;
    }
    c.push(a[0].powf(p));
    for m in 1..len {
        let mf = m as f64;
        let mut acc = 0.0;
        for j in 1..=m.min(a.len() - 1) {
            acc += (j as f64 * (p + 1.0) - mf) * a[j] * c[m - j];
        }
        c.push(acc / (mf * a[0]));
    }
    c
}

/// Taylor coefficients `0..len` of an analytic function on the unit disc,
/// from `n` samples on the circle of radius `r`.
///
/// Aliasing from coefficients beyond `n` is damped by `r^n`; rounding error
/// is amplified by `r^{-len}`.
pub fn taylor_by_fft<F>(f: F, r: f64, n: usize, len: usize) -> Vec<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(len <= n);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| f(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let mut scale = 1.0 / n as f64;
    let inv_r = 1.0 / r;
    buf.iter()
        .take(len)
        .map(|v| {
            let out = v.re * scale;
            scale *= inv_r;
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_matches_binomial() {
        // (1 + 2z)^{1/2}: c_m = C(1/2, m) 2^m
        let c = series_pow(&[1.0, 2.0], 0.5, 8);
        let want = crate::special::binomial_series(0.5_f64, 8);
        for m in 0..8 {
            assert!((c[m] - want[m] * 2_f64.powi(m as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_recovers_geometric_series() {
        // 1/(1 - z/2)
        let c = taylor_by_fft(|z| 1.0 / (1.0 - z * 0.5), 0.9, 256, 40);
        for (m, v) in c.iter().enumerate() {
            assert!((v - 0.5_f64.powi(m as i32)).abs() < 1e-13, "m={m}");
        }
    }
}
