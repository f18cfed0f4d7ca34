//! Goodness-of-fit statistics and the experiment orchestration built on them.

mod config;
mod experiment;
pub mod export;

pub use config::{ExperimentConfig, Scaling, Suite};
pub use experiment::{run_experiment, Experiment};

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Kind of statistic behind a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    Ks,
    Tv,
    ChiSquare,
    TailSlope,
    Moment,
}

/// One comparison of an observable against a law or a reference value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Stable identifier, also the suffix of its threshold key.
    pub id: String,
    /// Acceptance criterion the comparison belongs to.
    pub criterion: u8,
    pub kind: StatisticKind,
    /// Nonnegative; `None` when the comparison could not be evaluated.
    pub value: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    pub sample_size: usize,
    pub law: String,
    /// Diagnostics do not count towards the overall verdict.
    pub diagnostic: bool,
    pub notes: String,
    pub error: Option<String>,
}

impl ComparisonReport {
    pub fn new(id: &str, criterion: u8, kind: StatisticKind, law: &str) -> Self {
        Self {
            id: id.to_string(),
            criterion,
            kind,
            value: None,
            threshold: f64::NAN,
            pass: false,
            sample_size: 0,
            law: law.to_string(),
            diagnostic: false,
            notes: String::new(),
            error: None,
        }
    }

    /// Sets value and threshold; passes iff `value <= threshold`.
    pub fn judged(mut self, value: f64, threshold: f64) -> Self {
        self.value = Some(value);
        self.threshold = threshold;
        self.pass = value.is_finite() && value >= 0.0 && value <= threshold;
        self
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.sample_size = n;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(&s.into());
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.diagnostic = true;
        self
    }

    pub fn failed(mut self, err: &Error, threshold: f64) -> Self {
        self.threshold = threshold;
        self.pass = false;
        self.error = Some(err.to_string());
        self
    }

    /// The failure stems from a numeric or module error rather than a
    /// statistic above its threshold.
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return domain("sample contains NaN");
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov distance `sup |F_n - F|`.
pub fn ks_statistic<F>(samples: &[f64], mut cdf: F) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let xs = sorted(samples)?;
    if xs.len() < 2 {
        return domain("KS needs at least 2 samples");
    }
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    // ties are handled by jumping over the whole run of equal values
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d)
}

/// Like [`ks_statistic`] with a fallible cdf; the first error is returned.
pub fn ks_statistic_try<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut err = None;
    let d = ks_statistic(samples, |x| match cdf(x) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical probabilities of the cells `min, min+1, ..., cap` and a final
/// cell lumping everything above `cap`.
pub fn lumped_empirical(samples: &[u64], min: u64, cap: u64) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if cap <= min {
        return domain(format!("cap {cap} must exceed the support minimum {min}"));
    }
    let cells = (cap - min) as usize + 2;
    let mut counts = vec![0usize; cells];
    for &x in samples {
        if x < min {
            return domain(format!("observation {x} below the support minimum {min}"));
        }
        counts[((x - min) as usize).min(cells - 1)] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Law probabilities on the same cells as [`lumped_empirical`]; the last
/// cell gets the remainder `1 - Σ`.
pub fn lumped_law<F>(pmf: F, min: u64, cap: u64) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64>,
{
    if cap <= min {
        return domain(format!("cap {cap} must exceed the support minimum {min}"));
    }
    let mut p = Vec::with_capacity((cap - min) as usize + 2);
    let mut acc = 0.0;
    for k in min..=cap {
        let v = pmf(k)?;
        acc += v;
        p.push(v);
    }
    let rest = 1.0 - acc;
    if rest < -1e-9 {
        return domain(format!("law mass {acc} exceeds one below the cap"));
    }
    p.push(rest.max(0.0));
    Ok(p)
}

/// Total variation `(1/2) Σ |p̂_k - p_k|` between two pmfs on common cells.
pub fn discrete_tv(empirical: &[f64], law: &[f64]) -> Result<f64> {
    if empirical.len() != law.len() {
        return domain(format!("pmfs have {} and {} cells", empirical.len(), law.len()));
    }
    if empirical.is_empty() {
        return Err(Error::EmptySample);
    }
    for (name, p) in [("empirical", empirical), ("law", law)] {
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 || p.iter().any(|v| *v < 0.0) {
            return domain(format!("{name} pmf is not normalised (sum {s})"));
        }
    }
    Ok(0.5 * empirical.iter().zip(law).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Pearson chi-square `Σ (O - E)^2 / E` of cell probabilities observed on
/// `n` samples; cells with zero expectation are skipped.
pub fn chi_square(empirical: &[f64], law: &[f64], n: usize) -> Result<f64> {
    if empirical.len() != law.len() {
        return domain("chi-square cells differ in length");
    }
    let nf = n as f64;
    Ok(empirical
        .iter()
        .zip(law)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| nf * (o - e).powi(2) / e)
        .sum())
}

/// Least-squares slope of `ln S` on `ln x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    /// Standard error of the slope from the regression residuals.
    pub stderr: f64,
    pub points: usize,
}

impl SlopeEstimate {
    /// Relative deviation `|slope/target - 1|`.
    pub fn relative_error(&self, target: f64) -> f64 {
        (self.slope / target - 1.0).abs()
    }
}

fn tail_grid(lo: f64, hi: f64, points: usize, discrete: bool) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return domain(format!("tail range [{lo}, {hi}] must be positive and nonempty"));
    }
    let mut g: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1).max(1) as f64))
        .map(|x| if discrete { x.round() } else { x })
        .collect();
    g.dedup();
    if g.len() < 10 {
        return domain(format!("tail fit needs at least 10 grid points, got {}", g.len()));
    }
    Ok(g)
}

fn fit(points: &[(f64, f64)]) -> SlopeEstimate {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = points.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if points.len() > 2 {
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    SlopeEstimate {
        slope,
        stderr,
        points: points.len(),
    }
}

/// Tail slope from samples: `ln(#{X > x}/n)` against `ln x` on `points`
/// log-spaced grid points in `[lo, hi]`, rounded to integers when
/// `discrete`. Needs at least 100 samples beyond `lo`.
pub fn tail_slope(samples: &[f64], lo: f64, hi: f64, points: usize, discrete: bool) -> Result<SlopeEstimate> {
    let xs = sorted(samples)?;
    let grid = tail_grid(lo, hi, points, discrete)?;
    let n = xs.len();
    let beyond = n - xs.partition_point(|&v| v <= grid[0]);
    if beyond < 100 {
        return Err(Error::InsufficientTail {
            found: beyond,
            needed: 100,
            start: lo,
        });
    }
    let mut pts = Vec::with_capacity(grid.len());
    for &x in &grid {
        let above = n - xs.partition_point(|&v| v <= x);
        if above == 0 {
            return domain(format!("tail range reaches {x}, beyond the largest observation"));
        }
        pts.push((x.ln(), (above as f64 / n as f64).ln()));
    }
    Ok(fit(&pts))
}

/// Tail slope of a known survival function on the same kind of grid.
pub fn tail_slope_survival<F>(survival: F, lo: f64, hi: f64, points: usize, discrete: bool) -> Result<SlopeEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid = tail_grid(lo, hi, points, discrete)?;
    let mut pts = Vec::with_capacity(grid.len());
    for &x in &grid {
        let s = survival(x)?;
        if !(s > 0.0) {
            return domain(format!("survival vanishes at {x}"));
        }
        pts.push((x.ln(), s.ln()));
    }
    Ok(fit(&pts))
}

/// Distance between the empirical joint law of `(x, y)` and the product of
/// the marginal cdfs `fx ⊗ fy`, maximised over the four quadrants anchored
/// at the nodes of a `grid x grid` lattice of empirical marginal quantiles.
pub fn ks_2d_product<F, G>(xs: &[f64], ys: &[f64], fx: F, fy: G, grid: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if xs.len() != ys.len() {
        return domain("paired samples differ in length");
    }
    if grid < 2 {
        return domain("2D KS needs a grid of at least 2 nodes per axis");
    }
    let sx = sorted(xs)?;
    let sy = sorted(ys)?;
    let n = xs.len();
    let node = |s: &[f64], i: usize| s[((i + 1) * n / (grid + 1)).min(n - 1)];
    let gx: Vec<f64> = (0..grid).map(|i| node(&sx, i)).collect();
    let gy: Vec<f64> = (0..grid).map(|i| node(&sy, i)).collect();
    // cell (i, j) holds points with gx[i-1] < x <= gx[i]; index grid means beyond
    let mut cells = vec![0usize; (grid + 1) * (grid + 1)];
    for (&x, &y) in xs.iter().zip(ys) {
        let i = gx.partition_point(|&g| g < x);
        let j = gy.partition_point(|&g| g < y);
        cells[i * (grid + 1) + j] += 1;
    }
    // cum[i][j] = #{x <= gx[i], y <= gy[j]}
    let mut cum = vec![0usize; grid * grid];
    for i in 0..grid {
        let mut row = 0;
        for j in 0..grid {
            row += cells[i * (grid + 1) + j];
            cum[i * grid + j] = row + if i > 0 { cum[(i - 1) * grid + j] } else { 0 };
        }
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for i in 0..grid {
        let px = sx.partition_point(|&v| v <= gx[i]) as f64 / nf;
        let fxi = fx(gx[i]);
        for j in 0..grid {
            let py = sy.partition_point(|&v| v <= gy[j]) as f64 / nf;
            let fyj = fy(gy[j]);
            let ll = cum[i * grid + j] as f64 / nf;
            let quads = [
                (ll, fxi * fyj),
                (px - ll, fxi * (1.0 - fyj)),
                (py - ll, (1.0 - fxi) * fyj),
                (1.0 - px - py + ll, (1.0 - fxi) * (1.0 - fyj)),
            ];
            for (e, f) in quads {
                d = d.max((e - f).abs());
            }
        }
    }
    Ok(d)
}

/// Pearson sample correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return domain("paired samples differ in length");
    }
    if xs.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((m, v))
}

/// Lower median.
pub fn median(xs: &[f64]) -> Result<f64> {
    let s = sorted(xs)?;
    Ok(s[(s.len() - 1) / 2])
}
