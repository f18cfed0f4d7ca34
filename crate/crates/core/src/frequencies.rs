//! Paintbox constructions: the small-time Poisson/Slack surrogate for the
//! ranked frequencies of the coalescent, painting of labelled balls, and
//! conditional block-count moments.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{domain, Error, Result};
use crate::slack::SlackDistribution;
use crate::special::{gamma, CompensatedSum};

/// Where a frequency vector came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyOrigin {
    /// Small-time surrogate at coalescent time `s`.
    SmallTimeSurrogate { s: f64, alpha: f64 },
    External,
}

/// Ranked frequencies summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    freqs: Vec<f64>,
    origin: FrequencyOrigin,
}

impl FrequencyVector {
    /// Validates positivity, nonincreasing order and unit sum (1e-12).
    pub fn new(freqs: Vec<f64>, origin: FrequencyOrigin) -> Result<Self> {
        if freqs.is_empty() {
            return domain("frequency vector is empty");
        }
        if let Some(f) = freqs.iter().find(|f| !(**f > 0.0)) {
            return domain(format!("frequencies must be positive, found {f}"));
        }
        if freqs.windows(2).any(|w| w[1] > w[0]) {
            return domain("frequencies must be nonincreasing");
        }
        let total: CompensatedSum<f64> = freqs.iter().copied().collect();
        if (total.value() - 1.0).abs() > 1e-12 {
            return domain(format!("frequencies sum to {}", total.value()));
        }
        Ok(Self { freqs, origin })
    }

    /// Normalises and ranks positive weights.
    pub fn from_weights(mut w: Vec<f64>, origin: FrequencyOrigin) -> Result<Self> {
        w.sort_unstable_by(|a, b| b.total_cmp(a));
        let total: CompensatedSum<f64> = w.iter().copied().collect();
        let total = total.value();
        for x in &mut w {
            *x /= total;
        }
        Self::new(w, origin)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn origin(&self) -> FrequencyOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Rows `(rank, frequency)`, rank starting at 1.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.freqs.iter().enumerate().map(|(i, f)| (i + 1, *f))
    }
}

/// One draw of the small-time surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateDraw {
    pub freqs: FrequencyVector,
    /// Mean of the Poisson atom count.
    pub gamma: f64,
    /// Draws of an empty atom set that were discarded.
    pub redraws: u32,
}

/// Expected atom count `(s/(αΓ(α)))^{-1/(α-1)}` at coalescent time `s`.
pub fn surrogate_atom_mean(alpha: f64, s: f64) -> f64 {
    (s / (alpha * gamma(alpha))).powf(-1.0 / (alpha - 1.0))
}

/// Ranked frequencies at small coalescent time `s`.
///
/// The coalescent time maps to the branching-process time
/// `u = s/((α-1)αΓ(α))`; `D ~ Poisson(((α-1)u)^{-1/(α-1)})` Slack atoms are
/// drawn and normalised. Empty draws are repeated up to 100 times.
pub fn small_time_frequencies<R: Rng + ?Sized>(
    s: f64,
    dist: &SlackDistribution,
    rng: &mut R,
) -> Result<SurrogateDraw> {
    let alpha = dist.alpha();
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("time must be positive, got {s}"));
    }
    let u = s / ((alpha - 1.0) * alpha * gamma(alpha));
    let gamma_u = ((alpha - 1.0) * u).powf(-1.0 / (alpha - 1.0));
    if gamma_u < 10.0 {
        warn!("surrogate atom mean {gamma_u:.3} < 10 at s={s}: outside the small-time regime");
    }
    let poisson = Poisson::new(gamma_u).map_err(|e| Error::Domain(format!("Poisson mean {gamma_u}: {e}")))?;
    let mut redraws = 0;
    loop {
        let d = poisson.sample(rng) as usize;
        if d > 0 {
            let atoms: Vec<f64> = (0..d).map(|_| dist.sample(rng)).collect();
            let freqs = FrequencyVector::from_weights(
                atoms,
                FrequencyOrigin::SmallTimeSurrogate { s, alpha },
            )?;
            return Ok(SurrogateDraw {
                freqs,
                gamma: gamma_u,
                redraws,
            });
        }
        redraws += 1;
        if redraws >= 100 {
            return Err(Error::Degenerate(format!(
                "no atoms in 100 draws at s={s} (mean {gamma_u})"
            )));
        }
    }
}

/// Atom count of one surrogate draw at time `s`, without drawing the atoms.
/// Follows the same redraw rule for empty draws as [`small_time_frequencies`].
pub fn surrogate_atom_count<R: Rng + ?Sized>(alpha: f64, s: f64, rng: &mut R) -> Result<u64> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("time must be positive, got {s}"));
    }
    let g = surrogate_atom_mean(alpha, s);
    let poisson = Poisson::new(g).map_err(|e| Error::Domain(format!("Poisson mean {g}: {e}")))?;
    for _ in 0..100 {
        let d = poisson.sample(rng) as u64;
        if d > 0 {
            return Ok(d);
        }
    }
    Err(Error::Degenerate(format!("no atoms in 100 draws at s={s} (mean {g})")))
}

/// Result of painting `n` labelled balls.
#[derive(Debug, Clone)]
pub struct Painting {
    /// Balls per interval, in the order of the frequency vector.
    pub occupancy: Vec<u32>,
    /// Interval of each tracked label `1..=k`.
    pub tracked: Vec<usize>,
}

impl Painting {
    /// Sizes of the nonempty blocks.
    pub fn blocks(&self) -> impl Iterator<Item = u32> + '_ {
        self.occupancy.iter().copied().filter(|&c| c > 0)
    }

    pub fn block_count(&self) -> usize {
        self.blocks().count()
    }

    pub fn largest(&self) -> u32 {
        self.occupancy.iter().copied().max().unwrap_or(0)
    }

    /// Size of the block holding tracked label `i` (0-based).
    pub fn tracked_block_size(&self, i: usize) -> u32 {
        self.occupancy[self.tracked[i]]
    }
}

fn interval_of(cum: &[f64], x: f64) -> usize {
    cum.partition_point(|&c| c <= x).min(cum.len() - 1)
}

/// Throws `n` balls uniformly on `[0, 1]` partitioned by `freqs`.
///
/// Labels `1..=tracked` get their own uniforms; the rest are bucketed from
/// sorted uniforms built from exponential spacings.
pub fn paintbox<R: Rng + ?Sized>(freqs: &FrequencyVector, n: usize, tracked: usize, rng: &mut R) -> Result<Painting> {
    if n == 0 {
        return domain("paintbox needs n >= 1");
    }
    if tracked > n {
        return domain(format!("cannot track {tracked} of {n} labels"));
    }
    let cum: Vec<f64> = freqs
        .freqs
        .iter()
        .scan(0.0, |s, f| {
            *s += f;
            Some(*s)
        })
        .collect();
    let mut occupancy = vec![0u32; cum.len()];
    let tracked: Vec<usize> = (0..tracked)
        .map(|_| {
            let i = interval_of(&cum, rng.random::<f64>());
            occupancy[i] += 1;
            i
        })
        .collect();
    let rest = n - tracked.len();
    if rest > 0 {
        let spacings: Vec<f64> = (0..=rest).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = spacings.iter().sum();
        let mut pos = 0.0;
        let mut i = 0;
        for e in &spacings[..rest] {
            pos += e;
            let x = pos / total;
            while i + 1 < cum.len() && cum[i] <= x {
                i += 1;
            }
            occupancy[i] += 1;
        }
    }
    Ok(Painting { occupancy, tracked })
}

/// Returns `θ_i` with probability `θ_i`.
pub fn size_biased_pick<R: Rng + ?Sized>(freqs: &FrequencyVector, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &f in &freqs.freqs {
        acc += f;
        if u < acc {
            return f;
        }
    }
    *freqs.freqs.last().unwrap()
}

/// Exact mean `Σ_i (1 - (1 - θ_i)^n)` of the number of occupied intervals.
pub fn conditional_block_count_mean(freqs: &FrequencyVector, n: usize) -> f64 {
    let nf = n as f64;
    let acc: CompensatedSum<f64> = freqs.freqs.iter().map(|&t| -(nf * (-t).ln_1p()).exp_m1()).collect();
    acc.value()
}

/// Exact mean and variance of the number of occupied intervals when `n`
/// balls are painted on `freqs`. Cost is quadratic in the number of atoms.
pub fn conditional_block_count_moments(freqs: &FrequencyVector, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return domain("need n >= 1");
    }
    let nf = n as f64;
    // P(interval i empty) = (1 - θ_i)^n
    let empty: Vec<f64> = freqs.freqs.iter().map(|&t| (nf * (-t).ln_1p()).exp()).collect();
    let mut mean = CompensatedSum::default();
    let mut var = CompensatedSum::default();
    for &e in &empty {
        mean.add(1.0 - e);
        var.add(e * (1.0 - e));
    }
    let th = &freqs.freqs;
    for i in 0..th.len() {
        for j in (i + 1)..th.len() {
            // (1-a-b)^n - (1-a)^n (1-b)^n without cancellation
            let (a, b) = (th[i], th[j]);
            let r = -(a * b) / ((1.0 - a) * (1.0 - b));
            let term = if a + b >= 1.0 {
                -empty[i] * empty[j]
            } else {
                empty[i] * empty[j] * (nf * r.ln_1p()).exp_m1()
            };
            var.add(2.0 * term);
        }
    }
    Ok((mean.value(), var.value().max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::stream;

    fn fv(v: &[f64]) -> FrequencyVector {
        FrequencyVector::new(v.to_vec(), FrequencyOrigin::External).unwrap()
    }

    #[test]
    fn validation() {
        assert!(FrequencyVector::new(vec![0.5, 0.6], FrequencyOrigin::External).is_err());
        assert!(FrequencyVector::new(vec![0.4, 0.6], FrequencyOrigin::External).is_err());
        assert!(FrequencyVector::new(vec![1.0, 0.0], FrequencyOrigin::External).is_err());
    }

    #[test]
    fn trivial_paintings() {
        let mut rng = stream(1, "fq", 0);
        let p = paintbox(&fv(&[1.0]), 17, 3, &mut rng).unwrap();
        assert_eq!(p.occupancy, vec![17]);
        assert_eq!(p.tracked, vec![0, 0, 0]);
        assert_eq!(conditional_block_count_moments(&fv(&[1.0]), 50).unwrap(), (1.0, 0.0));
        let (m, v) = conditional_block_count_moments(&fv(&[0.5, 0.3, 0.2]), 1).unwrap();
        assert!((m - 1.0).abs() < 1e-15 && v.abs() < 1e-15);
    }

    #[test]
    fn two_atom_variance_by_enumeration() {
        // θ = (0.7, 0.3), n = 3: K = 1 w.p. 0.7^3 + 0.3^3, else 2
        let p1 = 0.343 + 0.027;
        let mean = p1 + 2.0 * (1.0 - p1);
        let var = p1 + 4.0 * (1.0 - p1) - mean * mean;
        let (m, v) = conditional_block_count_moments(&fv(&[0.7, 0.3]), 3).unwrap();
        assert!((m - mean).abs() < 1e-14);
        assert!((v - var).abs() < 1e-14);
    }
}
