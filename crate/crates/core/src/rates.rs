//! Characteristic measures and merger rates of Λ-coalescents.
//!
//! All Beta rates are evaluated from log-gamma values so that block counts in
//! the hundreds of thousands stay in range. The singleton rates follow the
//! convention `λ_{1,b,k} = C(b-1, k-1) λ_{b,k}`.

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::{ln_binomial, ln_gamma, CompensatedSum};

/// Shape of the measure Λ on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind<T> {
    /// Beta(2 - alpha, alpha), `0 < alpha < 2`.
    BetaAlpha(T),
    /// Unit point mass at zero (Kingman).
    KingmanDirac,
}

/// The finite measure Λ driving a Λ-coalescent. Both supported kinds carry
/// total mass one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicMeasure<T> {
    kind: MeasureKind<T>,
}

impl<T: Real> CharacteristicMeasure<T> {
    pub fn beta(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::lit(2.0)) {
            return domain(format!("Beta measure needs 0 < alpha < 2, got {alpha}"));
        }
        Ok(Self {
            kind: MeasureKind::BetaAlpha(alpha),
        })
    }

    pub fn kingman() -> Self {
        Self {
            kind: MeasureKind::KingmanDirac,
        }
    }

    pub fn kind(&self) -> MeasureKind<T> {
        self.kind
    }

    pub fn alpha(&self) -> Option<T> {
        match self.kind {
            MeasureKind::BetaAlpha(a) => Some(a),
            MeasureKind::KingmanDirac => None,
        }
    }

    /// Λ([0, 1]).
    pub fn total_mass(&self) -> T {
        T::one()
    }

    /// True when `∫ x^{-1} Λ(dx) < ∞`, i.e. Beta with `alpha < 1`.
    pub fn is_dust(&self) -> bool {
        matches!(self.kind, MeasureKind::BetaAlpha(a) if a < T::one())
    }

    /// Returns alpha if the measure is in the regime `1 < alpha < 2` where
    /// the limit laws hold.
    pub fn limit_regime_alpha(&self) -> Result<T> {
        match self.kind {
            MeasureKind::BetaAlpha(a) if a > T::one() => Ok(a),
            MeasureKind::BetaAlpha(a) => domain(format!(
                "limit laws need 1 < alpha < 2, measure has alpha = {a}"
            )),
            MeasureKind::KingmanDirac => domain("limit laws need a Beta measure, got Kingman"),
        }
    }

    /// `ln B(2 - alpha, alpha)`, the Beta normaliser.
    fn ln_norm(alpha: T) -> T {
        // B(2-a, a) = Γ(2-a) Γ(a) / Γ(2)
        ln_gamma(T::lit(2.0) - alpha) + ln_gamma(alpha)
    }
}

fn check_bk(b: u64, k: u64) -> Result<()> {
    if b < 2 {
        return domain(format!("block count must be >= 2, got {b}"));
    }
    if k < 2 || k > b {
        return domain(format!("merger size must satisfy 2 <= k <= b, got k={k}, b={b}"));
    }
    Ok(())
}

/// `ln λ_{b,k}`; `-inf` where the rate vanishes.
pub fn log_lambda_bk<T: Real>(measure: &CharacteristicMeasure<T>, b: u64, k: u64) -> Result<T> {
    check_bk(b, k)?;
    Ok(match measure.kind {
        MeasureKind::KingmanDirac => {
            if k == 2 {
                T::zero()
            } else {
                T::neg_infinity()
            }
        }
        MeasureKind::BetaAlpha(alpha) => {
            let kk = T::from_u64(k).unwrap();
            let bb = T::from_u64(b).unwrap();
            // B(k - a, b - k + a) / B(2 - a, a)
            ln_gamma(kk - alpha) + ln_gamma(bb - kk + alpha)
                - ln_gamma(bb)
                - CharacteristicMeasure::ln_norm(alpha)
        }
    })
}

/// Rate `λ_{b,k}` at which one given k-tuple among b blocks merges.
pub fn lambda_bk<T: Real>(measure: &CharacteristicMeasure<T>, b: u64, k: u64) -> Result<T> {
    Ok(log_lambda_bk(measure, b, k)?.exp())
}

/// Sums `exp(terms)` stably: shift by the maximum, then compensated summation
/// from the first entry upward. Returns the log of the sum.
fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let max = terms
        .iter()
        .copied()
        .fold(T::neg_infinity(), |m, v| if v > m { v } else { m });
    if max == T::neg_infinity() {
        return max;
    }
    let acc: CompensatedSum<T> = terms.iter().map(|&v| (v - max).exp()).collect();
    max + acc.value().ln()
}

/// Total merger rate `g_b = Σ_{k=2}^{b} C(b,k) λ_{b,k}`.
pub fn total_rate<T: Real>(measure: &CharacteristicMeasure<T>, b: u64) -> Result<T> {
    Ok(RateTable::new(measure, b)?.total_rate())
}

/// Closed form of `g_b`. For Beta(2-α, α) this is
/// `(b-1) Γ(b+α-1) / (α Γ(α) Γ(b))`, valid on the whole range `0 < α < 2`.
pub fn total_rate_closed_form<T: Real>(measure: &CharacteristicMeasure<T>, b: u64) -> Result<T> {
    if b < 2 {
        return domain(format!("block count must be >= 2, got {b}"));
    }
    let bb = T::from_u64(b).unwrap();
    Ok(match measure.kind {
        MeasureKind::KingmanDirac => bb * (bb - T::one()) / T::lit(2.0),
        MeasureKind::BetaAlpha(a) => {
            let one = T::one();
            ((bb - one).ln() + ln_gamma(bb + a - one) - a.ln() - ln_gamma(a) - ln_gamma(bb)).exp()
        }
    })
}

/// `λ_{1,b,k} = C(b-1, k-1) λ_{b,k}`: rate at which a given singleton merges
/// with exactly `k - 1` of the other blocks.
pub fn singleton_merge_rate<T: Real>(
    measure: &CharacteristicMeasure<T>,
    b: u64,
    k: u64,
) -> Result<T> {
    let ll = log_lambda_bk(measure, b, k)?;
    Ok((ll + ln_binomial::<T>(b - 1, k - 1)).exp())
}

/// `g_{1,b} = Σ_{k=2}^{b} λ_{1,b,k}`, summed term by term.
pub fn singleton_total_rate<T: Real>(measure: &CharacteristicMeasure<T>, b: u64) -> Result<T> {
    check_bk(b, 2)?;
    let terms: Vec<T> = (2..=b)
        .map(|k| {
            log_lambda_bk(measure, b, k).map(|ll| ll + ln_binomial::<T>(b - 1, k - 1))
        })
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms).exp())
}

/// Closed form of `g_{1,b}`: `(Γ(b+α-1)/(Γ(α)Γ(b)) - 1)/(α-1)` for Beta
/// measures (the harmonic number `H_{b-1}` at α = 1), `b - 1` for Kingman.
pub fn singleton_total_rate_closed_form<T: Real>(
    measure: &CharacteristicMeasure<T>,
    b: u64,
) -> Result<T> {
    check_bk(b, 2)?;
    let bb = T::from_u64(b).unwrap();
    let one = T::one();
    Ok(match measure.kind {
        MeasureKind::KingmanDirac => bb - one,
        MeasureKind::BetaAlpha(a) if (a - one).abs() < T::lit(1e-6) => {
            (1..b).map(|j| one / T::from_u64(j).unwrap()).collect::<CompensatedSum<T>>().value()
        }
        MeasureKind::BetaAlpha(a) => {
            let ratio = (ln_gamma(bb + a - one) - ln_gamma(a) - ln_gamma(bb)).exp();
            (ratio - one) / (a - one)
        }
    })
}

/// Large-b equivalent `b^{α-1} / ((α-1) Γ(α))` of `g_{1,b}`, for `1 < α < 2`.
pub fn singleton_total_rate_asymptotic<T: Real>(alpha: T, b: u64) -> Result<T> {
    if !(alpha > T::one() && alpha < T::lit(2.0)) {
        return domain(format!("asymptotic needs 1 < alpha < 2, got {alpha}"));
    }
    let bb = T::from_u64(b).unwrap();
    let one = T::one();
    Ok(((alpha - one) * bb.ln() - (alpha - one).ln() - ln_gamma(alpha)).exp())
}

/// All merger rates for one block count b.
#[derive(Debug, Clone)]
pub struct RateTable<T> {
    b: u64,
    /// `ln λ_{b,k}` at index `k - 2`.
    log_lambda: Vec<T>,
    log_g: T,
}

impl<T: Real> RateTable<T> {
    pub fn new(measure: &CharacteristicMeasure<T>, b: u64) -> Result<Self> {
        check_bk(b, 2)?;
        let log_lambda: Vec<T> = (2..=b)
            .map(|k| log_lambda_bk(measure, b, k))
            .collect::<Result<_>>()?;
        let weighted: Vec<T> = log_lambda
            .iter()
            .zip(2..=b)
            .map(|(&ll, k)| ll + ln_binomial::<T>(b, k))
            .collect();
        let log_g = log_sum_exp(&weighted);
        Ok(Self {
            b,
            log_lambda,
            log_g,
        })
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn log_lambda(&self) -> &[T] {
        &self.log_lambda
    }

    pub fn lambda(&self, k: u64) -> T {
        assert!((2..=self.b).contains(&k), "k={k} outside 2..={}", self.b);
        self.log_lambda[(k - 2) as usize].exp()
    }

    pub fn log_total_rate(&self) -> T {
        self.log_g
    }

    pub fn total_rate(&self) -> T {
        self.log_g.exp()
    }

    /// Probability that the next merger involves exactly k blocks:
    /// `C(b,k) λ_{b,k} / g_b`.
    pub fn merger_size_probability(&self, k: u64) -> T {
        assert!((2..=self.b).contains(&k));
        (self.log_lambda[(k - 2) as usize] + ln_binomial::<T>(self.b, k) - self.log_g).exp()
    }
}

/// Sequential description of the merger-size law `p_k = C(b,k) λ_{b,k} / g_b`
/// used by the simulator: `p_2` in closed form and the ratio `p_{k+1}/p_k`.
///
/// For Beta(2-α, α) these are `p_2 = α b / (2 (b + α - 2))` and
/// `p_{k+1}/p_k = (b-k)(k-α) / ((k+1)(b-k-1+α))`; no gamma evaluations needed.
#[derive(Debug, Clone, Copy)]
pub struct MergerSizeLaw {
    alpha: Option<f64>,
}

impl MergerSizeLaw {
    pub fn new(measure: &CharacteristicMeasure<f64>) -> Self {
        Self {
            alpha: measure.alpha(),
        }
    }

    #[inline]
    pub fn first(&self, b: u64) -> f64 {
        match self.alpha {
            None => 1.0,
            Some(a) => {
                let b = b as f64;
                a * b / (2.0 * (b + a - 2.0))
            }
        }
    }

    /// `p_{k+1} / p_k`, for `2 <= k < b`.
    #[inline]
    pub fn ratio(&self, b: u64, k: u64) -> f64 {
        match self.alpha {
            None => 0.0,
            Some(a) => {
                let (b, k) = (b as f64, k as f64);
                (b - k) * (k - a) / ((k + 1.0) * (b - k - 1.0 + a))
            }
        }
    }

    /// Inverse-CDF draw of the merger size from a uniform `u` in [0,1),
    /// scanning upward from k = 2 and stopping at the first k whose
    /// cumulative probability exceeds u.
    #[inline]
    pub fn sample(&self, b: u64, u: f64) -> u64 {
        let mut k = 2;
        let mut p = self.first(b);
        let mut cum = p;
        while u >= cum && k < b {
            p *= self.ratio(b, k);
            k += 1;
            cum += p;
            if p == 0.0 {
                // rounding left u above the total mass; the last k with
                // positive probability absorbs it
                return k - 1;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(a: f64) -> CharacteristicMeasure<f64> {
        CharacteristicMeasure::beta(a).unwrap()
    }

    #[test]
    fn kingman_rates() {
        let m = CharacteristicMeasure::<f64>::kingman();
        assert_eq!(lambda_bk(&m, 17, 2).unwrap(), 1.0);
        assert_eq!(lambda_bk(&m, 17, 3).unwrap(), 0.0);
        assert!((total_rate(&m, 10).unwrap() - 45.0).abs() < 1e-12);
        assert!((singleton_merge_rate(&m, 12, 2).unwrap() - 11.0).abs() < 1e-12);
        assert!((singleton_total_rate(&m, 12).unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn two_blocks_merge_at_unit_rate() {
        for a in [0.5, 1.0, 1.2, 1.5, 1.8] {
            let m = beta(a);
            assert!((lambda_bk(&m, 2, 2).unwrap() - 1.0).abs() < 1e-14);
            assert!((total_rate(&m, 2).unwrap() - 1.0).abs() < 1e-14);
            assert!((singleton_merge_rate(&m, 2, 2).unwrap() - 1.0).abs() < 1e-14);
            assert!((singleton_total_rate(&m, 2).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_three_blocks_by_hand() {
        // λ_{3,2} = B(1/2, 5/2)/B(1/2, 3/2) = 3/4, λ_{3,3} = B(3/2,3/2)/B(1/2,3/2) = 1/4
        let m = beta(1.5);
        assert!((lambda_bk(&m, 3, 2).unwrap() - 0.75).abs() < 1e-14);
        assert!((lambda_bk(&m, 3, 3).unwrap() - 0.25).abs() < 1e-14);
        assert!((total_rate(&m, 3).unwrap() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        let m = beta(1.5);
        assert!(lambda_bk(&m, 5, 1).is_err());
        assert!(lambda_bk(&m, 5, 6).is_err());
        assert!(total_rate(&m, 1).is_err());
        assert!(CharacteristicMeasure::beta(2.0_f64).is_err());
        assert!(CharacteristicMeasure::beta(0.0_f64).is_err());
        assert!(singleton_total_rate_asymptotic(0.9_f64, 10).is_err());
    }

    #[test]
    fn closed_forms_match_sums() {
        for a in [0.5, 1.0, 1.2, 1.5, 1.8] {
            let m = beta(a);
            for b in [2_u64, 3, 7, 40, 300] {
                let s = total_rate(&m, b).unwrap();
                let c = total_rate_closed_form(&m, b).unwrap();
                assert!((s - c).abs() / c < 1e-12, "g_b a={a} b={b}: {s} vs {c}");
                let s1 = singleton_total_rate(&m, b).unwrap();
                let c1 = singleton_total_rate_closed_form(&m, b).unwrap();
                assert!((s1 - c1).abs() / c1 < 1e-11, "g_1b a={a} b={b}: {s1} vs {c1}");
            }
        }
    }

    #[test]
    fn rate_table_sums_to_total() {
        let m = beta(1.3);
        let t = RateTable::new(&m, 60).unwrap();
        let p: f64 = (2..=60).map(|k| t.merger_size_probability(k)).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merger_size_law_matches_table() {
        for a in [0.5, 1.5, 1.9] {
            let m = beta(a);
            let law = MergerSizeLaw::new(&m);
            for b in [2_u64, 3, 9, 50] {
                let t = RateTable::new(&m, b).unwrap();
                let mut p = law.first(b);
                for k in 2..=b {
                    let want = t.merger_size_probability(k);
                    assert!((p - want).abs() < 1e-12 * want.max(1e-300) + 1e-15, "a={a} b={b} k={k}");
                    if k < b {
                        p *= law.ratio(b, k);
                    }
                }
            }
        }
    }

    #[test]
    fn merger_size_sample_edges() {
        let law = MergerSizeLaw::new(&beta(1.5));
        assert_eq!(law.sample(2, 0.999_999), 2);
        assert_eq!(law.sample(100, 0.0), 2);
        assert_eq!(law.sample(5, 1.0 - 1e-17), 5);
        let kingman = MergerSizeLaw::new(&CharacteristicMeasure::kingman());
        assert_eq!(kingman.sample(50, 0.999), 2);
    }

    #[test]
    fn single_precision_rates() {
        let m = CharacteristicMeasure::<f32>::beta(1.5).unwrap();
        let l = lambda_bk(&m, 3, 2).unwrap();
        assert!((l - 0.75).abs() < 1e-5);
    }
}
