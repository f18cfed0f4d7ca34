//! Log-gamma and friends, generic over [`Real`].

use crate::scalar::Real;

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

const STIRLING_SHIFT: f64 = 12.0;

/// Natural logarithm of the Gamma function for `x > 0`.
///
/// Arguments below 12 are shifted upward with the recurrence
/// `ln Γ(x) = ln Γ(x + m) - ln(x (x+1) ... (x+m-1))` and the Stirling series
/// is summed at the shifted point. Returns NaN for `x <= 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if !(x > T::zero()) {
        return T::nan();
    }
    let shift = T::lit(STIRLING_SHIFT);
    let mut z = x;
    let mut prod = T::one();
    let mut log_acc = T::zero();
    while z < shift {
        prod = prod * z;
        // keep the running product well inside range
        if prod > T::lit(1e30) {
            log_acc = log_acc + prod.ln();
            prod = T::one();
        }
        z = z + T::one();
    }
    log_acc = log_acc + prod.ln();
    stirling(z) - log_acc
}

fn stirling<T: Real>(z: T) -> T {
    let half = T::lit(0.5);
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_8);
    let inv = z.recip();
    let inv2 = inv * inv;
    let mut series = T::zero();
    let mut pow = inv;
    for c in STIRLING {
        series = series + T::lit(c) * pow;
        pow = pow * inv2;
    }
    (z - half) * z.ln() - z + half_ln_two_pi + series
}

/// Gamma function for `x > 0`.
pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// `ln B(a, b)` for positive arguments.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)` for `0 <= k <= n`.
pub fn ln_binomial<T: Real>(n: u64, k: u64) -> T {
    debug_assert!(k <= n);
    let one = T::one();
    let n = T::from_u64(n).unwrap();
    let k = T::from_u64(k).unwrap();
    ln_gamma(n + one) - ln_gamma(k + one) - ln_gamma(n - k + one)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Generalised binomial coefficients `C(p, j)` for `j = 0..len`.
pub fn binomial_series<T: Real>(p: T, len: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(len);
    let mut c = T::one();
    for j in 0..len {
        out.push(c);
        let jj = T::from_usize_lossy(j);
        c = c * (p - jj) / (jj + T::one());
    }
    out
}
