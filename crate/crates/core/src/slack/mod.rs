//! Slack's distribution μ on (0, ∞) for `1 < α < 2`.
//!
//! μ is known only through its Laplace transform
//! `ℒ(λ) = 1 - (1 + λ^{1-α})^{-1/(α-1)}`. With `β = α - 1` the survival
//! function `S(x) = μ((x, ∞))` has transform `G(λ) = (1 + λ^β)^{-1/β}`,
//! which gives three evaluation routes:
//!
//! * near zero, the convergent series `S(x) = Σ_j C(-1/β, j) x^{jβ} / Γ(1+jβ)`;
//! * far out, the asymptotic series
//!   `S(x) ~ -(1/π) Σ_{j≥1} C(-1/β, j) Γ(1+jβ) sin(πjβ) x^{-jβ-1}`,
//!   whose first term is `x^{-α} / Γ(2-α)`;
//! * in between, numerical inversion of `G` by a [`LaplaceInverter`].
//!
//! Each series is used only where its own error estimate is below 1e-13.

mod inversion;

pub use inversion::{EulerInversion, FixedTalbot, LaplaceInverter};

use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadSettings};
use crate::scalar::Real;
use crate::special::ln_gamma;

const MAX_TERMS: usize = 4000;
const SERIES_MAX_TERM: f64 = 100.0;
const ASYMPTOTIC_REL_ERR: f64 = 1e-13;

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::one() && alpha < T::lit(2.0) {
        Ok(())
    } else {
        domain(format!("Slack's distribution needs 1 < alpha < 2, got {alpha}"))
    }
}

/// `ℒ_μ(λ) = 1 - (1 + λ^{1-α})^{-1/(α-1)}`, with `ℒ_μ(0) = 1`.
pub fn laplace<T: Real>(alpha: T, lam: T) -> Result<T> {
    check_alpha(alpha)?;
    if lam < T::zero() || lam.is_nan() {
        return domain(format!("Laplace argument must be >= 0, got {lam}"));
    }
    if lam == T::zero() {
        return Ok(T::one());
    }
    let beta = alpha - T::one();
    // 1 - (1+u)^{-1/β} = -expm1(-ln1p(u)/β), u = λ^{-β}
    let u = lam.powf(-beta);
    Ok(-(-(u.ln_1p()) / beta).exp_m1())
}

/// `∫ x^k e^{-sx} μ(dx) = (-1)^k ℒ^{(k)}(s)` for `s > 0`, by the Cauchy
/// integral of `ℒ` on a circle of radius `s/2`.
pub fn laplace_derivative(alpha: f64, s: f64, k: u32) -> Result<f64> {
    check_alpha(alpha)?;
    if !(s > 0.0) {
        return domain(format!("derivative route needs s > 0, got {s}"));
    }
    let beta = alpha - 1.0;
    let rho = 0.5 * s;
    let nodes = 128;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let theta = 2.0 * PI * j as f64 / nodes as f64;
        let w = Complex64::from_polar(1.0, theta);
        let z = s + rho * w;
        let l = 1.0 - (1.0 + z.powf(-beta)).powf(-1.0 / beta);
        acc += l * w.powi(-(k as i32));
    }
    let fact: f64 = (1..=k).map(f64::from).product();
    let deriv = acc.re * fact / (nodes as f64 * rho.powi(k as i32));
    Ok(if k % 2 == 0 { deriv } else { -deriv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    /// `S(x)`
    Survival,
    /// `-S'(x)`
    Density,
    /// `∫_0^x S(y) dy`
    Integrated,
}

/// Pointwise evaluation of S, the density and related integrals.
#[derive(Debug, Clone)]
pub struct SlackFunctions {
    alpha: f64,
    beta: f64,
    /// `C(-1/β, j)`
    coef: Vec<f64>,
    inverter: Arc<dyn LaplaceInverter>,
}

/// Which route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Series,
    Asymptotic,
    Inversion,
}

impl SlackFunctions {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_inverter(alpha, Arc::new(FixedTalbot::default()))
    }

    pub fn with_inverter(alpha: f64, inverter: Arc<dyn LaplaceInverter>) -> Result<Self> {
        check_alpha(alpha)?;
        let beta = alpha - 1.0;
        let coef = crate::special::binomial_series(-1.0 / beta, MAX_TERMS);
        Ok(Self {
            alpha,
            beta,
            coef,
            inverter,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inverter_name(&self) -> &'static str {
        self.inverter.name()
    }

    /// Convergent small-x series. Returns the value and the largest term,
    /// which bounds the cancellation error.
    fn series(&self, q: Quantity, x: f64) -> Option<(f64, f64)> {
        let lx = x.ln();
        let b = self.beta;
        let mut sum = match q {
            Quantity::Survival => 1.0,
            Quantity::Density => 0.0,
            Quantity::Integrated => x,
        };
        let mut max_term: f64 = sum.abs();
        for j in 1..MAX_TERMS {
            let jb = j as f64 * b;
            // x^{jβ + shift} / Γ(1 + jβ + shift)
            let shift = match q {
                Quantity::Survival => 0.0,
                Quantity::Density => -1.0,
                Quantity::Integrated => 1.0,
            };
            let mag = ((jb + shift) * lx - ln_gamma(1.0 + jb + shift)).exp();
            let term = self.coef[j] * mag;
            sum += if q == Quantity::Density { -term } else { term };
            max_term = max_term.max(term.abs());
            if jb > x + 2.0 && term.abs() < 1e-18 * max_term.max(1e-300) {
                return Some((sum, max_term));
            }
        }
        None
    }

    /// Asymptotic large-x series with optimal truncation. Returns the value
    /// and an error estimate (first omitted term).
    fn asymptotic(&self, q: Quantity, x: f64) -> (f64, f64) {
        let lx = x.ln();
        let b = self.beta;
        let base = if q == Quantity::Integrated { 1.0 } else { 0.0 };
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        let mut last_jb = b;
        for j in 1..MAX_TERMS {
            let jb = j as f64 * b;
            last_jb = jb;
            // magnitude of C Γ(1+jβ) x^{-jβ-1}, without the sine
            let mag = self.coef[j].abs() * (ln_gamma(1.0 + jb) - (jb + 1.0) * lx).exp();
            if mag > prev {
                break;
            }
            let a = -mag.copysign(self.coef[j]) / PI * (PI * jb).sin();
            sum += match q {
                Quantity::Survival => a,
                Quantity::Density => a * (jb + 1.0) / x,
                Quantity::Integrated => -a * x / jb,
            };
            prev = mag;
            if mag < 1e-17 * sum.abs() {
                break;
            }
        }
        let err = match q {
            Quantity::Survival => prev,
            Quantity::Density => prev * (last_jb + 1.0) / x,
            Quantity::Integrated => prev * x / b,
        };
        (base + sum, err)
    }

    fn inversion(&self, q: Quantity, x: f64) -> f64 {
        let b = self.beta;
        let g = move |s: Complex64| (1.0 + s.powf(b)).powf(-1.0 / b);
        match q {
            Quantity::Survival => self.inverter.invert(&g, x),
            Quantity::Density => self.inverter.invert(&|s| 1.0 - s * g(s), x),
            Quantity::Integrated => self.inverter.invert(&|s| g(s) / s, x),
        }
    }

    fn eval(&self, q: Quantity, x: f64) -> (f64, Route) {
        if let Some((v, max_term)) = self.series(q, x) {
            if max_term < SERIES_MAX_TERM {
                return (v, Route::Series);
            }
        }
        let (v, err) = self.asymptotic(q, x);
        let scale = match q {
            Quantity::Integrated => (1.0 - v).abs(),
            _ => v.abs(),
        };
        if err <= ASYMPTOTIC_REL_ERR * scale {
            return (v, Route::Asymptotic);
        }
        (self.inversion(q, x), Route::Inversion)
    }

    /// `S(x) = μ((x, ∞))`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.eval(Quantity::Survival, x).0.clamp(0.0, 1.0)
    }

    /// Survival together with the route that produced it.
    pub fn survival_with_route(&self, x: f64) -> (f64, Route) {
        self.eval(Quantity::Survival, x)
    }

    /// Survival by numerical inversion only.
    pub fn survival_by_inversion(&self, x: f64) -> f64 {
        self.inversion(Quantity::Survival, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (v, route) = self.eval(Quantity::Survival, x);
        if route == Route::Series {
            // F from the series directly avoids 1 - (1 - F)
            let lx = x.ln();
            let mut sum = 0.0;
            for j in 1..MAX_TERMS {
                let jb = j as f64 * self.beta;
                let term = self.coef[j] * (jb * lx - ln_gamma(1.0 + jb)).exp();
                sum -= term;
                if jb > x + 2.0 && term.abs() < 1e-18 * sum.abs().max(1e-300) {
                    break;
                }
            }
            return sum.clamp(0.0, 1.0);
        }
        (1.0 - v).clamp(0.0, 1.0)
    }

    /// Density of μ.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.eval(Quantity::Density, x).0.max(0.0)
    }

    /// `∫_0^x S(y) dy`; tends to the mean 1.
    pub fn integrated_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.eval(Quantity::Integrated, x).0
    }

    /// CDF of the size-biased law `y μ(dy)`: `∫_0^x S - x S(x)`.
    pub fn size_biased_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.integrated_survival(x) - x * self.survival(x)).clamp(0.0, 1.0)
    }

    /// `x^{-α} / Γ(2-α)`.
    pub fn tail_asymptote(&self, x: f64) -> f64 {
        (-self.alpha * x.ln() - ln_gamma(2.0 - self.alpha)).exp()
    }

    /// `∫ e^{-sx} x^k μ(dx)`.
    ///
    /// Integration by parts turns this into `h(0) + ∫ h'(x) S(x) dx` with
    /// `h(x) = e^{-sx} x^k`; after `y = s x` the weight is
    /// `e^{-y} y^{k-1} (k - y)`. For `s = 0` only `k <= 1` is finite.
    pub fn weighted_integral(&self, k: u32, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return domain(format!("s must be >= 0, got {s}"));
        }
        if s == 0.0 {
            return match k {
                0 => Ok(1.0),
                1 => self.mean_by_quadrature(),
                _ => domain(format!("moment of order {k} is infinite for alpha < 2")),
            };
        }
        let kf = k as f64;
        let integrand = |y: f64| {
            let sv = self.survival(y / s);
            if k == 0 {
                -(-y).exp() * sv
            } else {
                (-y + (kf - 1.0) * y.ln()).exp() * (kf - y) * sv
            }
        };
        let y_max = kf + 12.0 * (kf + 1.0).sqrt() + 45.0;
        let mut cuts: Vec<f64> = vec![0.0, s, 10.0 * s, 100.0 * s, 1.0, kf, y_max];
        cuts.retain(|&c| c <= y_max);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        // absolute tolerance relative to ∫|integrand|, which bounds the
        // noise of the survival evaluation
        let rough = QuadSettings::with_rel_tol(1e-3);
        let mut scale = 0.0;
        for w in cuts.windows(2) {
            scale += integrate(|y| integrand(y).abs(), w[0], w[1], rough)?.value;
        }
        let settings = QuadSettings {
            abs_tol: 1e-11 * scale,
            rel_tol: 1e-12,
            max_intervals: 4000,
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += integrate(integrand, w[0], w[1], settings)?.value;
        }
        let head = if k == 0 { 1.0 } else { 0.0 };
        Ok(head + total * (-kf * s.ln()).exp())
    }

    /// `∫_0^∞ S`, split at 1 with `x = v^{-1/β}` on the outer part.
    fn mean_by_quadrature(&self) -> Result<f64> {
        let settings = QuadSettings::with_rel_tol(1e-12);
        let b = self.beta;
        let inner = integrate(|x| self.survival(x), 0.0, 1.0, settings)?.value;
        let outer = integrate(
            |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let x = v.powf(-1.0 / b);
                self.survival(x) * x / (b * v)
            },
            0.0,
            1.0,
            settings,
        )?
        .value;
        Ok(inner + outer)
    }
}

/// Grid used by [`SlackDistribution::build`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Smallest node; default puts `F(x_min)` near 1e-7.
    pub x_min: Option<f64>,
    /// Beyond this point the tail is Pareto with index α, matched in value.
    /// Default: the first decade from 1e4 on where S agrees with its
    /// leading asymptote within 1%, or where S drops below 1e-10 (the table
    /// cannot resolve smaller tail masses from a uniform draw).
    pub tail_switch_x: Option<f64>,
    pub per_decade: usize,
    /// Allowed decrease between adjacent nodes before monotonization fails.
    pub monotone_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: None,
            tail_switch_x: None,
            per_decade: 64,
            monotone_tol: 1e-9,
        }
    }
}

/// Tabulated Slack distribution for sampling.
#[derive(Debug, Clone)]
pub struct SlackDistribution {
    funcs: SlackFunctions,
    ln_x: Vec<f64>,
    cdf: Vec<f64>,
    surv: Vec<f64>,
    tail_switch_x: f64,
    survival_at_switch: f64,
    guide: Vec<u32>,
}

impl SlackDistribution {
    pub fn build(alpha: f64, grid: GridSpec) -> Result<Self> {
        Self::build_with(SlackFunctions::new(alpha)?, grid)
    }

    pub fn build_with(funcs: SlackFunctions, grid: GridSpec) -> Result<Self> {
        let (alpha, beta) = (funcs.alpha, funcs.beta);
        let x_min = grid.x_min.unwrap_or_else(|| {
            ((1e-7 * beta * crate::special::gamma(alpha)).ln() / beta)
                .exp()
                .clamp(1e-300, 1e-3)
        });
        if !(x_min > 0.0 && x_min <= 1e-3) {
            return domain(format!("x_min must lie in (0, 1e-3], got {x_min}"));
        }
        let tail_switch_x = match grid.tail_switch_x {
            Some(x) => x,
            None => {
                let mut x = 1e4;
                loop {
                    let sx = funcs.survival(x);
                    if sx < 1e-10 || (sx / funcs.tail_asymptote(x) - 1.0).abs() <= 0.01 {
                        break x;
                    }
                    x *= 10.0;
                }
            }
        };
        if !(tail_switch_x > x_min) {
            return domain("tail switch must exceed x_min");
        }
        let (l0, l1) = (x_min.ln(), tail_switch_x.ln());
        let nodes = ((l1 - l0) / std::f64::consts::LN_10 * grid.per_decade as f64).ceil() as usize + 1;
        let ln_x: Vec<f64> = (0..nodes)
            .map(|i| l0 + (l1 - l0) * i as f64 / (nodes - 1) as f64)
            .collect();
        let mut cdf: Vec<f64> = ln_x.iter().map(|l| funcs.cdf(l.exp())).collect();
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] - grid.monotone_tol {
                return Err(Error::Inversion(format!(
                    "CDF decreases by {:.3e} at x = {:.4e}",
                    cdf[i - 1] - cdf[i],
                    ln_x[i].exp()
                )));
            }
            if cdf[i] <= cdf[i - 1] {
                cdf[i] = f64::from_bits(cdf[i - 1].to_bits() + 1);
            }
        }
        assert!(cdf.windows(2).all(|w| w[1] > w[0]), "CDF table not strictly increasing");
        let surv: Vec<f64> = ln_x.iter().map(|l| funcs.survival(l.exp())).collect();
        let survival_at_switch = surv[nodes - 1];
        let guide = build_guide(&cdf);
        Ok(Self {
            funcs,
            ln_x,
            cdf,
            surv,
            tail_switch_x,
            survival_at_switch,
            guide,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.funcs.alpha
    }

    pub fn functions(&self) -> &SlackFunctions {
        &self.funcs
    }

    pub fn tail_switch_x(&self) -> f64 {
        self.tail_switch_x
    }

    pub fn x_min(&self) -> f64 {
        self.ln_x[0].exp()
    }

    pub fn nodes(&self) -> usize {
        self.ln_x.len()
    }

    /// Survival of the tabulated law: exact up to the switch, matched
    /// Pareto beyond.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.tail_switch_x {
            self.funcs.survival(x)
        } else {
            self.survival_at_switch * (x / self.tail_switch_x).powf(-self.funcs.alpha)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Mean of the tabulated law: trapezoid in `ln x` of `x S(x)`, the
    /// mass below `x_min`, and the Pareto tail `S_sw x_sw / (α - 1)`.
    pub fn table_mean(&self) -> f64 {
        let f = |i: usize| self.ln_x[i].exp() * self.surv[i];
        let mut acc = self.x_min() * (1.0 - self.cdf[0] * self.funcs.beta / (1.0 + self.funcs.beta));
        for i in 1..self.ln_x.len() {
            acc += 0.5 * (f(i) + f(i - 1)) * (self.ln_x[i] - self.ln_x[i - 1]);
        }
        acc + self.survival_at_switch * self.tail_switch_x / self.funcs.beta
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Quantile of the tabulated law.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        if u < self.cdf[0] {
            // F ≈ c x^β below the grid
            return self.x_min() * (u / self.cdf[0]).powf(1.0 / self.funcs.beta);
        }
        if 1.0 - u <= self.survival_at_switch {
            return self.tail_switch_x
                * (self.survival_at_switch / (1.0 - u)).powf(1.0 / self.funcs.alpha);
        }
        if u >= self.cdf[n - 1] {
            return self.tail_switch_x;
        }
        let g = ((u * self.guide.len() as f64) as usize).min(self.guide.len() - 1);
        let mut i = self.guide[g] as usize;
        while self.cdf[i + 1] <= u {
            i += 1;
        }
        let w = (u - self.cdf[i]) / (self.cdf[i + 1] - self.cdf[i]);
        (self.ln_x[i] + w * (self.ln_x[i + 1] - self.ln_x[i])).exp()
    }

    /// `∫ e^{-sx} x^k μ(dx)`; warns when the part beyond the tail switch
    /// carries more than 10% of the result.
    pub fn weighted_integral(&self, k: u32, s: f64) -> Result<f64> {
        let total = self.funcs.weighted_integral(k, s)?;
        if s > 0.0 && k > 0 {
            let y0 = s * self.tail_switch_x;
            let kf = k as f64;
            // weight of the region beyond the switch, bounded by S_sw times
            // the upper incomplete Gamma mass
            let tail = self.survival_at_switch
                * (-kf * s.ln()).exp()
                * upper_gamma_mass(kf, y0)
                * crate::special::gamma(kf);
            if tail > 0.1 * total.abs() {
                warn!("tail region carries {:.1}% of the weighted integral (k={k}, s={s})", 100.0 * tail / total);
            }
        }
        Ok(total)
    }

    /// Rows `(x, F, pdf)` of the table.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        self.ln_x
            .iter()
            .zip(&self.cdf)
            .map(|(&l, &f)| {
                let x = l.exp();
                (x, f, self.funcs.pdf(x))
            })
            .collect()
    }

    /// `∫ e^{-λx} μ(dx) = 1 - λ ∫ e^{-λx} S(x) dx` with `S` taken from the
    /// table nodes (trapezoid in `ln x`, linear below the grid). The Pareto
    /// tail beyond the table end is ignored.
    pub fn table_laplace(&self, lam: f64) -> f64 {
        let g = |l: f64, f: f64| {
            let x = l.exp();
            (-lam * x).exp() * (1.0 - f) * x
        };
        let mut acc = self.x_min();
        for i in 1..self.ln_x.len() {
            let (l0, l1) = (self.ln_x[i - 1], self.ln_x[i]);
            acc += 0.5 * (g(l0, self.cdf[i - 1]) + g(l1, self.cdf[i])) * (l1 - l0);
        }
        1.0 - lam * acc
    }
}

/// `P(Gamma(a) > y)`, crude but monotone: enough for a warning.
fn upper_gamma_mass(a: f64, y: f64) -> f64 {
    if y <= a {
        return 1.0;
    }
    ((a - 1.0) * y.ln() - y - ln_gamma(a)).exp() * (1.0 + a / (y - a).max(1.0))
}

fn build_guide(cdf: &[f64]) -> Vec<u32> {
    let m = cdf.len();
    let mut guide = Vec::with_capacity(m);
    let mut i = 0;
    for g in 0..m {
        let u = g as f64 / m as f64;
        while i + 2 < m && cdf[i + 1] <= u {
            i += 1;
        }
        guide.push(i as u32);
    }
    guide
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_values() {
        assert_eq!(laplace(1.5, 0.0).unwrap(), 1.0);
        assert!((laplace(1.5_f64, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(laplace(1.5_f64, 1e12).unwrap() < 1e-5);
        assert!(laplace(1.0_f64, 1.0).is_err());
        assert!((laplace(1.5_f32, 1.0).unwrap() - 0.75).abs() < 1e-6);
    }

    #[test]
    fn derivative_route() {
        // -ℒ'(λ) = (1 + λ^{-1/2})^{-3} λ^{-3/2} at α = 1.5, i.e. 1/8 at λ = 1
        let d = laplace_derivative(1.5, 1.0, 1).unwrap();
        assert!((d - 0.125).abs() < 1e-13, "{d}");
        let d0 = laplace_derivative(1.5, 1.0, 0).unwrap();
        assert!((d0 - 0.75).abs() < 1e-13);
    }

    #[test]
    fn routes_agree_where_they_overlap() {
        for alpha in [1.2, 1.5, 1.8] {
            let f = SlackFunctions::new(alpha).unwrap();
            for x in [0.5, 2.0, 5.0, 20.0, 60.0] {
                let inv = f.survival_by_inversion(x);
                let (hyb, _) = f.survival_with_route(x);
                assert!((inv - hyb).abs() < 1e-10, "alpha={alpha} x={x}: {inv} vs {hyb}");
            }
        }
    }

    #[test]
    fn integrated_and_size_biased_limits() {
        let f = SlackFunctions::new(1.5).unwrap();
        assert!((f.integrated_survival(1e8) - 1.0).abs() < 1e-3);
        assert!(f.size_biased_cdf(1e-6) < 1e-6);
        assert!((f.size_biased_cdf(1e10) - 1.0).abs() < 1e-4);
    }
}
