//! Limit laws of the Beta(2-α, α) coalescent as the sample size grows,
//! for `1 < α < 2`.
//!
//! Throughout, `T` is the scaled external branch length with
//! `P(T > t) = (1 + t/(αΓ(α)))^{-α/(α-1)}`, and most integrals over `T` run
//! on `u = (1 + t/(αΓ(α)))^{-1} ∈ (0, 1]`, where `t/(αΓ(α)) = (1-u)/u` and
//! `f_T(t) dt = (α/(α-1)) u^{α/(α-1)-1} du`.

mod series;

pub use series::{series_pow, taylor_by_fft};

use log::warn;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_vec, QuadSettings};
use crate::scalar::Real;
use crate::slack::SlackFunctions;
use crate::special::{binomial_series, gamma, ln_beta, ln_gamma};

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::one() && alpha < T::lit(2.0)) {
        return domain(format!("limit laws need 1 < alpha < 2, got {alpha}"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return domain(format!("{name} must be positive and finite, got {v}"));
    }
    Ok(())
}

/// `αΓ(α)`, the time unit of the limit laws.
fn time_unit<T: Real>(alpha: T) -> T {
    alpha * gamma(alpha)
}

/// `t_α = (t/(αΓ(α)))^{1/(α-1)}`.
pub fn t_alpha<T: Real>(alpha: T, t: T) -> T {
    (t / time_unit(alpha)).powf(T::one() / (alpha - T::one()))
}

// ---------------------------------------------------------------------------
// External branch length T

/// Density of `T`.
pub fn external_length_pdf<T: Real>(alpha: T, t: T) -> Result<T> {
    check_alpha(alpha)?;
    if t < T::zero() {
        return Ok(T::zero());
    }
    let beta = alpha - T::one();
    let base = T::one() + t / time_unit(alpha);
    Ok(base.powf(-alpha / beta - T::one()) / (beta * gamma(alpha)))
}

/// `P(T > t)`.
pub fn external_length_survival<T: Real>(alpha: T, t: T) -> Result<T> {
    check_alpha(alpha)?;
    if t <= T::zero() {
        return Ok(T::one());
    }
    let beta = alpha - T::one();
    Ok((T::one() + t / time_unit(alpha)).powf(-alpha / beta))
}

pub fn external_length_cdf<T: Real>(alpha: T, t: T) -> Result<T> {
    Ok(T::one() - external_length_survival(alpha, t)?)
}

fn external_length_quantile(alpha: f64, p: f64) -> f64 {
    let beta = alpha - 1.0;
    time_unit(alpha) * ((1.0 - p).powf(-beta / alpha) - 1.0)
}

// ---------------------------------------------------------------------------
// Merger multiplicity Q

/// `q_k = P(Q = k)`, by the recursion `q_{k+1} = q_k (k-α)/k` from
/// `q_2 = α-1`; large `k` goes through log-gamma.
pub fn q_pmf<T: Real>(alpha: T, k: u64) -> Result<T> {
    check_alpha(alpha)?;
    if k < 2 {
        return domain(format!("Q takes values k >= 2, got {k}"));
    }
    if k > 512 {
        let kk = T::from_u64(k).unwrap();
        let ln = (alpha - T::one()).ln() + ln_gamma(kk - alpha) - ln_gamma(kk) - ln_gamma(T::lit(2.0) - alpha);
        return Ok(ln.exp());
    }
    let mut q = alpha - T::one();
    for j in 2..k {
        let jj = T::from_u64(j).unwrap();
        q = q * (jj - alpha) / jj;
    }
    Ok(q)
}

/// `P(Q > k) = Γ(k+1-α) / (Γ(k) Γ(2-α))`.
pub fn q_survival<T: Real>(alpha: T, k: u64) -> Result<T> {
    check_alpha(alpha)?;
    if k < 1 {
        return Ok(T::one());
    }
    let kk = T::from_u64(k).unwrap();
    Ok((ln_gamma(kk + T::one() - alpha) - ln_gamma(kk) - ln_gamma(T::lit(2.0) - alpha)).exp())
}

/// `E[e^{-λQ}] = e^{-λ} (1 - (1 - e^{-λ})^{α-1})`.
pub fn q_laplace<T: Real>(alpha: T, lam: T) -> Result<T> {
    check_alpha(alpha)?;
    if !(lam >= T::zero()) {
        return domain(format!("lambda must be >= 0, got {lam}"));
    }
    let z = (-lam).exp();
    Ok(z * (T::one() - (-(-lam).exp_m1()).powf(alpha - T::one())))
}

// ---------------------------------------------------------------------------
// β(t)

/// pgf of `β(t)`: `z (1 + τ (1-z)^{α-1})^{-α/(α-1)}` with `τ = t/(αΓ(α))`.
pub fn beta_t_pgf(alpha: f64, t: f64, z: Complex64) -> Complex64 {
    let beta = alpha - 1.0;
    let tau = t / time_unit(alpha);
    pgf_tau(alpha, beta, tau, z)
}

fn pgf_tau(alpha: f64, beta: f64, tau: f64, z: Complex64) -> Complex64 {
    z * (1.0 + tau * (1.0 - z).powf(beta)).powf(-alpha / beta)
}

/// `P(β(t) = k)` for `k = 1..=kmax` (entry `k-1`), by Miller-recurrence
/// coefficient extraction from the pgf.
pub fn beta_t_pmf_table(alpha: f64, t: f64, kmax: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_positive("t", t)?;
    Ok(beta_coefficients(alpha, t / time_unit(alpha), kmax))
}

fn beta_coefficients(alpha: f64, tau: f64, len: usize) -> Vec<f64> {
    let beta = alpha - 1.0;
    let mut a: Vec<f64> = binomial_series(beta, len)
        .into_iter()
        .enumerate()
        .map(|(j, c)| if j % 2 == 0 { tau * c } else { -tau * c })
        .collect();
    a[0] = 1.0 + tau;
    series_pow(&a, -alpha / beta, len)
}

/// `P(β(t) = k)` by pgf coefficient extraction.
pub fn beta_t_pmf(alpha: f64, t: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return domain(format!("β(t) takes values k >= 1, got {k}"));
    }
    Ok(beta_t_pmf_table(alpha, t, k as usize)?[k as usize - 1])
}

/// `P(β(t) = k) = t_α^{k-1}/(k-1)! ∫ e^{-t_α x} x^k μ(dx)` through the
/// Slack law.
pub fn beta_t_pmf_slack(funcs: &SlackFunctions, t: f64, k: u64) -> Result<f64> {
    check_positive("t", t)?;
    if k < 1 {
        return domain(format!("β(t) takes values k >= 1, got {k}"));
    }
    let alpha = funcs.alpha();
    let s = t_alpha(alpha, t);
    let integral = funcs.weighted_integral(k as u32, s)?;
    let kf = k as f64;
    Ok(((kf - 1.0) * s.ln() - ln_gamma(kf)).exp() * integral)
}

/// `(α-1)Γ(α) P(β(t)=k) / t`, which tends to `q_k` as `t → 0+`.
pub fn q_from_beta_limit(alpha: f64, k: u64, t_small: f64) -> Result<f64> {
    if k < 2 {
        return domain(format!("need k >= 2, got {k}"));
    }
    Ok((alpha - 1.0) * gamma(alpha) * beta_t_pmf(alpha, t_small, k)? / t_small)
}

/// `(α-1)Γ(α) E[e^{-λβ(t)} 1{β(t) >= 2}] / t`, which tends to
/// `E[e^{-λQ}]` as `t → 0+`.
pub fn q_laplace_from_beta_limit(alpha: f64, lam: f64, t_small: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("t", t_small)?;
    let z = (-lam).exp();
    let p1 = beta_t_pmf(alpha, t_small, 1)?;
    let g = beta_t_pgf(alpha, t_small, Complex64::new(z, 0.0)).re;
    Ok((alpha - 1.0) * gamma(alpha) * (g - z * p1) / t_small)
}

// ---------------------------------------------------------------------------
// Minimal clade Y

/// Weight `(α/β) u^{α/β-1}` of `f_T(t) dt` on the u scale.
fn u_weight(alpha: f64, u: f64) -> f64 {
    let r = alpha / (alpha - 1.0);
    r * u.powf(r - 1.0)
}

fn tau_of_u(u: f64) -> f64 {
    (1.0 - u) / u
}

/// Coefficients `0..len` of `1 - (1 - G_τ(z))^{α-1}`, the pgf of `Y - 1`
/// given `T`.
fn y_conditional(alpha: f64, tau: f64, len: usize) -> Vec<f64> {
    let beta = alpha - 1.0;
    let c = beta_coefficients(alpha, tau, len.saturating_sub(1).max(1));
    let mut b = vec![0.0; len];
    b[0] = 1.0;
    for m in 1..len {
        b[m] = -c[m - 1];
    }
    let p = series_pow(&b, beta, len);
    let mut h: Vec<f64> = p.iter().map(|v| -v).collect();
    h[0] = 0.0;
    h
}

/// `P(Y = l)` for `l = 2..=lmax`, with the quadrature error estimate.
#[derive(Debug, Clone)]
pub struct YTable {
    /// Entry `l - 2`.
    pub pmf: Vec<f64>,
    pub error: f64,
}

impl YTable {
    pub fn get(&self, l: u64) -> Option<f64> {
        (l as usize).checked_sub(2).and_then(|i| self.pmf.get(i).copied())
    }
}

/// Table of `P(Y = l)`, `2 <= l <= lmax`, by exact series arithmetic at each
/// quadrature node (cost `O(lmax^2)` per node).
pub fn y_pmf_table(alpha: f64, lmax: usize, rel_tol: f64) -> Result<YTable> {
    check_alpha(alpha)?;
    if lmax < 2 {
        return domain(format!("lmax must be >= 2, got {lmax}"));
    }
    let dim = lmax - 1;
    let settings = QuadSettings {
        abs_tol: 1e-15,
        rel_tol,
        max_intervals: 4000,
    };
    let (pmf, error) = integrate_vec(
        |u, out| {
            let h = y_conditional(alpha, tau_of_u(u), lmax);
            let w = u_weight(alpha, u);
            for (o, v) in out.iter_mut().zip(&h[1..]) {
                *o = w * v;
            }
        },
        0.0,
        1.0,
        dim,
        settings,
    )?;
    Ok(YTable { pmf, error })
}

/// `P(Y = l)`.
pub fn y_pmf(alpha: f64, l: u64) -> Result<f64> {
    if l < 2 {
        return domain(format!("Y takes values l >= 2, got {l}"));
    }
    Ok(y_pmf_table(alpha, l as usize, 1e-10)?.pmf[l as usize - 2])
}

/// Table of `P(Y = l)`, `2 <= l <= lmax`, from FFT samples of the
/// conditional pgf on a circle inside the unit disc. Suited to `lmax` in the
/// thousands where [`y_pmf_table`] becomes quadratic.
pub fn y_pmf_table_fft(alpha: f64, lmax: usize, rel_tol: f64) -> Result<YTable> {
    check_alpha(alpha)?;
    if lmax < 2 {
        return domain(format!("lmax must be >= 2, got {lmax}"));
    }
    let beta = alpha - 1.0;
    let n = (4 * lmax).next_power_of_two().max(1024);
    // r^n = 1e-12 damps aliasing; r^{-lmax} stays near 1e3
    let r = (-(1e12_f64.ln()) / n as f64).exp();
    let settings = QuadSettings {
        abs_tol: 1e-15,
        rel_tol,
        max_intervals: 2000,
    };
    let (pmf, error) = integrate_vec(
        |u, out| {
            let tau = tau_of_u(u);
            let h = taylor_by_fft(
                |z| 1.0 - (1.0 - pgf_tau(alpha, beta, tau, z)).powf(beta),
                r,
                n,
                lmax,
            );
            let w = u_weight(alpha, u);
            for (o, v) in out.iter_mut().zip(&h[1..]) {
                *o = w * v;
            }
        },
        0.0,
        1.0,
        lmax - 1,
        settings,
    )?;
    Ok(YTable { pmf, error })
}

/// Law of the clade size when the `Q - 1` blocks joining {1} are uniform
/// picks among the blocks, i.e. follow the non-size-biased version of
/// `β(t)` (pgf `H_t` with `zH_t'(z)/H_t'(1) = G_t(z)`). Given `T`, the pgf
/// of `Y - 1` is `1 - (1 - H_t(z))^{α-1} = 1 - (1-z)^{α-1}(1+τ)/(1+τ(1-z)^{α-1})`.
/// This is the law the engine reproduces; `P(Y = 2) = (α-1)α/(2α-1)` and
/// `P(Y > k) ~ α k^{1-α}/Γ(2-α)`.
pub fn y_uniform_pick_pmf_table(alpha: f64, lmax: usize, rel_tol: f64) -> Result<YTable> {
    check_alpha(alpha)?;
    if lmax < 2 {
        return domain(format!("lmax must be >= 2, got {lmax}"));
    }
    let beta = alpha - 1.0;
    let len = lmax;
    let w: Vec<f64> = binomial_series(beta, len)
        .into_iter()
        .enumerate()
        .map(|(j, c)| if j % 2 == 0 { c } else { -c })
        .collect();
    let settings = QuadSettings {
        abs_tol: 1e-15,
        rel_tol,
        max_intervals: 4000,
    };
    let (pmf, error) = integrate_vec(
        |u, out| {
            let tau = tau_of_u(u);
            let d: Vec<f64> = w.iter().enumerate().map(|(j, v)| tau * v + (j == 0) as u8 as f64).collect();
            let inv = series_pow(&d, -1.0, len);
            let weight = u_weight(alpha, u);
            for (m, o) in out.iter_mut().enumerate() {
                // coefficient m+1 of -(1+τ) w/(1+τw)
                let c: f64 = (0..=m + 1).map(|j| w[j] * inv[m + 1 - j]).sum();
                *o = -weight * (1.0 + tau) * c;
            }
        },
        0.0,
        1.0,
        lmax - 1,
        settings,
    )?;
    Ok(YTable { pmf, error })
}

/// `E[e^{-λY}] = ∫ e^{-λ}(1 - (1 - G_t(e^{-λ}))^{α-1}) f_T(t) dt`.
pub fn y_laplace(alpha: f64, lam: f64, rel_tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(lam >= 0.0) {
        return domain(format!("lambda must be >= 0, got {lam}"));
    }
    let beta = alpha - 1.0;
    let z = Complex64::new((-lam).exp(), 0.0);
    let r = integrate(
        |u| {
            let g = pgf_tau(alpha, beta, tau_of_u(u), z).re;
            u_weight(alpha, u) * (1.0 - (1.0 - g).powf(beta))
        },
        0.0,
        1.0,
        QuadSettings::with_rel_tol(rel_tol),
    )?;
    Ok(z.re * r.value)
}

/// Tail of `Y`: `P(Y > k) ~ constant · k^{-exponent}`.
#[derive(Debug, Clone, Copy)]
pub struct YTail {
    pub constant: f64,
    pub exponent: f64,
    /// `∫ t^{α-1} f_T(t) dt` by quadrature.
    pub moment: f64,
    /// The same moment in closed form,
    /// `(αΓ(α))^{α-1} (α/(α-1)) B(α, α/(α-1) - (α-1))`.
    pub moment_closed_form: f64,
}

pub fn y_tail(alpha: f64) -> Result<YTail> {
    check_alpha(alpha)?;
    let beta = alpha - 1.0;
    let r = alpha / beta;
    let unit = time_unit(alpha);
    let power = r - beta - 1.0;
    let q = integrate(
        |u| (1.0 - u).powf(beta) * u.powf(power),
        0.0,
        1.0,
        QuadSettings {
            abs_tol: 1e-16,
            rel_tol: 1e-13,
            max_intervals: 4000,
        },
    )?;
    let moment = unit.powf(beta) * r * q.value;
    let moment_closed_form = unit.powf(beta) * r * ln_beta(1.0 + beta, r - beta).exp();
    let exponent = beta * beta;
    let constant = moment / ((beta * gamma(alpha)).powf(beta) * gamma(1.0 - exponent));
    Ok(YTail {
        constant,
        exponent,
        moment,
        moment_closed_form,
    })
}

// ---------------------------------------------------------------------------
// Largest block

/// `P(W(t) <= x) = exp(-x^{-α} (α-1) t / Γ(2-α))`.
pub fn gumbel_w_cdf<T: Real>(alpha: T, t: T, x: T) -> Result<T> {
    check_alpha(alpha)?;
    if !(t > T::zero()) {
        return domain(format!("t must be positive, got {t}"));
    }
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let k = (alpha - T::one()) * t / gamma(T::lit(2.0) - alpha);
    Ok((-(x.powf(-alpha)) * k).exp())
}

fn gumbel_w_pdf(alpha: f64, t: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = (alpha - 1.0) * t / gamma(2.0 - alpha);
    let e = x.powf(-alpha) * k;
    alpha * e / x * (-e).exp()
}

fn gumbel_w_quantile(alpha: f64, t: f64, p: f64) -> f64 {
    let k = (alpha - 1.0) * t / gamma(2.0 - alpha);
    (k / -p.ln()).powf(1.0 / alpha)
}

/// `P(W̃ <= x) = ∫ exp(-x^{-α} t/(αΓ(α)Γ(2-α))) f_T(t) dt`.
pub fn wtilde_cdf(alpha: f64, x: f64) -> Result<f64> {
    wtilde_cdf_with(alpha, x, 1e-10)
}

pub fn wtilde_cdf_with(alpha: f64, x: f64, rel_tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let beta = alpha - 1.0;
    let r = alpha / beta;
    let c = x.powf(-alpha) / gamma(2.0 - alpha);
    let settings = QuadSettings {
        abs_tol: 1e-15,
        rel_tol,
        max_intervals: 4000,
    };
    if c <= 1.0 {
        let v = integrate(|u| (-c * tau_of_u(u)).exp() * u_weight(alpha, u), 0.0, 1.0, settings)?;
        return Ok(v.value.min(1.0));
    }
    // τ = w/c concentrates the integrand on w = O(1)
    let v = integrate(
        |w| (-w).exp() * r * (1.0 + w / c).powf(-r - 1.0),
        0.0,
        60.0,
        settings,
    )?;
    Ok((v.value / c).min(1.0))
}

// ---------------------------------------------------------------------------
// Block counts

/// Limits of the block count `K^{(n)}(n^{1-α} t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCountLimits<T> {
    /// Limit of `E[K]/n`.
    pub mean_ratio: T,
    /// Limit of the conditional variance over `n`.
    pub var_ratio: T,
    /// `(t/(αΓ(α)))^{-1/(α-1)}`, the scaled block count of the coalescent
    /// started from infinitely many blocks.
    pub unrestricted_count: T,
}

pub fn block_count_limits<T: Real>(alpha: T, t: T) -> Result<BlockCountLimits<T>> {
    check_alpha(alpha)?;
    if !(t > T::zero()) {
        return domain(format!("t must be positive, got {t}"));
    }
    let inv = -T::one() / (alpha - T::one());
    let s = t / time_unit(alpha);
    let mean_ratio = (T::one() + s).powf(inv);
    let var_ratio = (T::lit(2.0).powf(T::one() - alpha) + s).powf(inv) - mean_ratio;
    Ok(BlockCountLimits {
        mean_ratio,
        var_ratio,
        unrestricted_count: s.powf(inv),
    })
}

/// Limit of `E[Var(K | Θ)]/n` when exactly `n` labels are painted.
///
/// `var_ratio` treats the occupancy indicators as independent, which is the
/// Poissonised count. With a fixed number of balls the indicators are
/// negatively correlated and the limit drops by `(1+s)^{-2α/(α-1)}`.
pub fn fixed_n_variance_ratio<T: Real>(alpha: T, t: T) -> Result<T> {
    let lim = block_count_limits(alpha, t)?;
    let s = t / time_unit(alpha);
    let e = -T::lit(2.0) * alpha / (alpha - T::one());
    Ok(lim.var_ratio - (T::one() + s).powf(e))
}

// ---------------------------------------------------------------------------
// Law handles

/// Which limit law a [`LawHandle`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    ExternalLengthT,
    MergerQ,
    BetaT(f64),
    MinimalCladeY,
    GumbelW(f64),
    WTilde,
    /// Point mass at the limiting `K/n`.
    BlockCountLimit(f64),
}

impl LawKind {
    pub fn name(&self) -> &'static str {
        match self {
            LawKind::ExternalLengthT => "external_length",
            LawKind::MergerQ => "merger_q",
            LawKind::BetaT(_) => "beta_t",
            LawKind::MinimalCladeY => "minimal_clade_y",
            LawKind::GumbelW(_) => "gumbel_w",
            LawKind::WTilde => "wtilde",
            LawKind::BlockCountLimit(_) => "block_count",
        }
    }
}

/// Truncation and tolerance for discrete tables and quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSettings {
    pub kmax: usize,
    pub rel_tol: f64,
}

impl Default for LimitSettings {
    fn default() -> Self {
        Self {
            kmax: 200,
            rel_tol: 1e-9,
        }
    }
}

/// One row of a law table dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawRow {
    pub arg: f64,
    /// pmf for discrete laws, pdf for continuous ones; NaN when the law has
    /// no density evaluator.
    pub density: f64,
    pub cdf: f64,
}

/// Evaluator for one limit law at fixed α.
#[derive(Debug, Clone)]
pub struct LawHandle {
    kind: LawKind,
    alpha: f64,
    settings: LimitSettings,
    /// Discrete laws: pmf from `support_min` to `kmax`.
    pmf: Vec<f64>,
    cum: Vec<f64>,
}

impl LawHandle {
    pub fn new(kind: LawKind, alpha: f64, settings: LimitSettings) -> Result<Self> {
        check_alpha(alpha)?;
        if settings.kmax < 2 {
            return Err(Error::Config(format!("kmax must be >= 2, got {}", settings.kmax)));
        }
        let kmax = settings.kmax;
        let pmf = match kind {
            LawKind::MergerQ => {
                let mut v = Vec::with_capacity(kmax - 1);
                let mut q = alpha - 1.0;
                for k in 2..=kmax {
                    v.push(q);
                    q *= (k as f64 - alpha) / k as f64;
                }
                v
            }
            LawKind::BetaT(t) => beta_t_pmf_table(alpha, t, kmax)?,
            LawKind::MinimalCladeY => y_pmf_table(alpha, kmax, settings.rel_tol)?.pmf,
            LawKind::GumbelW(t) | LawKind::BlockCountLimit(t) => {
                check_positive("t", t)?;
                Vec::new()
            }
            LawKind::ExternalLengthT | LawKind::WTilde => Vec::new(),
        };
        let cum = pmf
            .iter()
            .scan(0.0, |s, p| {
                *s += p;
                Some(*s)
            })
            .collect();
        Ok(Self {
            kind,
            alpha,
            settings,
            pmf,
            cum,
        })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn settings(&self) -> LimitSettings {
        self.settings
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, LawKind::MergerQ | LawKind::BetaT(_) | LawKind::MinimalCladeY)
    }

    /// Smallest atom of a discrete law.
    pub fn support_min(&self) -> u64 {
        match self.kind {
            LawKind::BetaT(_) => 1,
            _ => 2,
        }
    }

    /// Tabulated pmf from `support_min` to `kmax`.
    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    /// `1 - Σ_{k <= kmax} pmf(k)`.
    pub fn truncated_mass(&self) -> f64 {
        1.0 - self.cum.last().copied().unwrap_or(1.0)
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        if !self.is_discrete() {
            return domain(format!("{} has no pmf", self.kind.name()));
        }
        let lo = self.support_min();
        if k < lo {
            return Ok(0.0);
        }
        let i = (k - lo) as usize;
        if let Some(p) = self.pmf.get(i) {
            return Ok(*p);
        }
        warn!(
            "{} pmf requested at k={k} beyond kmax={}; computing directly",
            self.kind.name(),
            self.settings.kmax
        );
        match self.kind {
            LawKind::MergerQ => q_pmf(self.alpha, k),
            LawKind::BetaT(t) => beta_t_pmf(self.alpha, t, k),
            LawKind::MinimalCladeY => y_pmf(self.alpha, k),
            _ => unreachable!(),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self.kind {
            LawKind::ExternalLengthT => external_length_pdf(self.alpha, x),
            LawKind::GumbelW(t) => Ok(gumbel_w_pdf(self.alpha, t, x)),
            _ => domain(format!("{} has no density evaluator", self.kind.name())),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self.kind {
            LawKind::ExternalLengthT => external_length_cdf(self.alpha, x),
            LawKind::GumbelW(t) => gumbel_w_cdf(self.alpha, t, x),
            LawKind::WTilde => wtilde_cdf_with(self.alpha, x, self.settings.rel_tol),
            LawKind::BlockCountLimit(t) => {
                let m = block_count_limits(self.alpha, t)?.mean_ratio;
                Ok(if x >= m { 1.0 } else { 0.0 })
            }
            LawKind::MergerQ | LawKind::BetaT(_) | LawKind::MinimalCladeY => {
                let lo = self.support_min() as f64;
                if x < lo {
                    return Ok(0.0);
                }
                let k = x.floor();
                let i = (k - lo) as usize;
                if let Some(c) = self.cum.get(i) {
                    return Ok(*c);
                }
                if self.kind == LawKind::MergerQ {
                    return Ok(1.0 - q_survival(self.alpha, k as u64)?);
                }
                let extra: f64 = (self.pmf.len() + lo as usize..=k as usize)
                    .map(|j| self.pmf(j as u64))
                    .sum::<Result<f64>>()?;
                Ok(self.cum.last().unwrap() + extra)
            }
        }
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        match self.kind {
            LawKind::ExternalLengthT => external_length_survival(self.alpha, x),
            LawKind::MergerQ if x >= 1.0 => q_survival(self.alpha, x.floor() as u64),
            _ => Ok(1.0 - self.cdf(x)?),
        }
    }

    /// Table dump for plotting and golden files: every atom up to `kmax`
    /// for discrete laws, `points` grid values otherwise. Panics if the CDF
    /// decreases along the grid.
    pub fn table(&self, points: usize) -> Result<Vec<LawRow>> {
        let points = points.max(2);
        let rows: Vec<LawRow> = if self.is_discrete() {
            let lo = self.support_min();
            self.pmf
                .iter()
                .zip(&self.cum)
                .enumerate()
                .map(|(i, (&p, &c))| LawRow {
                    arg: (lo + i as u64) as f64,
                    density: p,
                    cdf: c,
                })
                .collect()
        } else {
            let grid: Vec<f64> = match self.kind {
                LawKind::ExternalLengthT => (0..points)
                    .map(|i| external_length_quantile(self.alpha, 0.999 * i as f64 / (points - 1) as f64))
                    .collect(),
                LawKind::GumbelW(t) => (0..points)
                    .map(|i| {
                        let p = 1e-3 + (0.999 - 1e-3) * i as f64 / (points - 1) as f64;
                        gumbel_w_quantile(self.alpha, t, p)
                    })
                    .collect(),
                LawKind::WTilde => (0..points)
                    .map(|i| 10_f64.powf(-2.0 + 4.0 * i as f64 / (points - 1) as f64))
                    .collect(),
                LawKind::BlockCountLimit(t) => {
                    let m = block_count_limits(self.alpha, t)?.mean_ratio;
                    (0..points).map(|i| 2.0 * m * i as f64 / (points - 1) as f64).collect()
                }
                _ => unreachable!(),
            };
            grid.into_iter()
                .map(|x| {
                    Ok(LawRow {
                        arg: x,
                        density: self.pdf(x).unwrap_or(f64::NAN),
                        cdf: self.cdf(x)?,
                    })
                })
                .collect::<Result<_>>()?
        };
        assert!(
            rows.windows(2).all(|w| w[1].cdf >= w[0].cdf - 1e-12),
            "{} cdf decreases on its table grid",
            self.kind.name()
        );
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_recursion_matches_gamma_form() {
        for k in [2, 3, 10, 500, 513, 600] {
            let rec = {
                let mut q = 0.5;
                for j in 2..k {
                    q *= (j as f64 - 1.5) / j as f64;
                }
                q
            };
            assert!((q_pmf(1.5, k).unwrap() / rec - 1.0).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn q_survival_is_consistent() {
        let s: f64 = (2..=50).map(|k| q_pmf(1.3, k).unwrap()).sum();
        assert!((1.0 - s - q_survival(1.3, 50).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn y_conditional_at_zero_time_is_point_mass() {
        // τ = 0: G(z) = z, so 1 - (1-z)^β has coefficients q_{l}
        let h = y_conditional(1.5, 0.0, 6);
        for l in 2..=6 {
            assert!((h[l - 1] - q_pmf(1.5, l as u64).unwrap()).abs() < 1e-14);
        }
    }
}
