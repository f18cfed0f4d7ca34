//! Suite orchestration: engine batches, scalings and comparisons.

use std::cell::RefCell;
use std::rc::Rc;

use log::info;

use super::config::{ExperimentConfig, Scaling, Suite};
use super::export::{self, Artifact};
use super::{
    correlation, discrete_tv, ks_2d_product, ks_statistic_try, lumped_empirical, lumped_law,
    mean_var, median, tail_slope, tail_slope_survival, ComparisonReport, StatisticKind,
};
use crate::engine::{FunctionalSample, Request, Simulator};
use crate::error::{Error, Result};
use crate::frequencies::{paintbox, small_time_frequencies, surrogate_atom_count, surrogate_atom_mean};
use crate::limits::{
    beta_t_pmf_slack, beta_t_pmf_table, block_count_limits, fixed_n_variance_ratio, external_length_cdf, gumbel_w_cdf, q_from_beta_limit,
    q_laplace, q_laplace_from_beta_limit, q_pmf, wtilde_cdf_with, y_pmf_table, y_tail, y_uniform_pick_pmf_table,
};
use crate::montecarlo::{run_replicates, stream};
use crate::quad::{integrate, QuadSettings};
use crate::rates::{lambda_bk, singleton_merge_rate};
use crate::slack::{laplace, GridSpec, SlackDistribution, SlackFunctions};
use crate::special::ln_binomial;
use crate::Measure;

/// Reports and raw exports of one run.
#[derive(Debug, Clone, Default)]
pub struct Experiment {
    pub reports: Vec<ComparisonReport>,
    pub artifacts: Vec<Artifact>,
}

impl Experiment {
    /// Every non-diagnostic comparison passed.
    pub fn passed(&self) -> bool {
        self.reports.iter().filter(|r| !r.diagnostic).all(|r| r.pass)
    }

    /// Some comparison could not be evaluated.
    pub fn has_errors(&self) -> bool {
        self.reports.iter().any(|r| r.is_error())
    }
}

/// Runs the configured suites. Errors inside a comparison are recorded in
/// its report; only an invalid configuration aborts the batch.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    validate(cfg)?;
    let ctx = Context {
        cfg,
        runs: RefCell::new(Vec::new()),
        artifacts: RefCell::new(Vec::new()),
    };
    let mut reports = Vec::new();
    for &suite in &cfg.suites {
        info!("suite {suite}");
        reports.extend(match suite {
            Suite::Rates => ctx.rates(),
            Suite::External => ctx.external(),
            Suite::Joint => ctx.joint(),
            Suite::Merger => ctx.merger(),
            Suite::Dust => ctx.dust(),
            Suite::Beta => ctx.beta(),
            Suite::Clade => ctx.clade(),
            Suite::Ytail => ctx.ytail(),
            Suite::Gumbel => ctx.gumbel(),
            Suite::Wtilde => ctx.wtilde(),
            Suite::Blocks => ctx.blocks(),
            Suite::Slack => ctx.slack(),
            Suite::Qlaplace => ctx.qlaplace(),
        });
    }
    for r in &reports {
        info!(
            "{} value={:?} threshold={} pass={}",
            r.id, r.value, r.threshold, r.pass
        );
    }
    Ok(Experiment {
        reports,
        artifacts: ctx.artifacts.into_inner(),
    })
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let a = cfg.alpha;
    if !(a > 1.0 && a < 2.0) {
        return Err(Error::Config(format!("validation suites need 1 < alpha < 2, got {a}")));
    }
    if !(cfg.tolerance > 0.0 && cfg.tolerance < 1e-2) {
        return Err(Error::Config(format!("tolerance {} out of range", cfg.tolerance)));
    }
    for &s in &cfg.suites {
        let sized = !matches!(s, Suite::Rates | Suite::Joint | Suite::Dust | Suite::Slack | Suite::Qlaplace);
        if sized {
            let n = cfg.suite_n(s)?;
            cfg.suite_reps(s)?;
            if n > cfg.max_n {
                return Err(Error::Resource { n, max: cfg.max_n });
            }
            if n < 2 {
                return Err(Error::Config(format!("{s}: n must be >= 2")));
            }
        }
    }
    for key in [
        "external.n_small",
        "dust.reps",
        "dust.n_min",
        "dust.n_max",
        "clade.kingman_n",
        "clade.kingman_reps",
        "gumbel.surrogate_reps",
        "gumbel.bins",
    ] {
        let n = cfg.count(key)?;
        if key.ends_with("n_small") || key.ends_with("n_max") || key.ends_with("kingman_n") {
            if n > cfg.max_n {
                return Err(Error::Resource { n, max: cfg.max_n });
            }
        }
    }
    Ok(())
}

/// Outcome of one comparison before it is judged.
struct Obs {
    value: f64,
    n: usize,
    notes: String,
}

impl Obs {
    fn new(value: f64, n: usize, notes: impl Into<String>) -> Self {
        Self {
            value,
            n,
            notes: notes.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RunSpec {
    /// `None` selects Kingman.
    alpha: Option<f64>,
    n: usize,
    reps: usize,
    tracked: usize,
    probes: Vec<f64>,
    split: Option<usize>,
}

impl RunSpec {
    fn beta(alpha: f64, n: usize, reps: usize, tracked: usize, probes: Vec<f64>) -> Self {
        Self {
            alpha: Some(alpha),
            n,
            reps,
            tracked,
            probes,
            split: None,
        }
    }

    // replicate count is left out: replicate i is the same in any batch size
    fn label(&self) -> String {
        let m = self.alpha.map_or("kingman".to_string(), |a| format!("beta{a:?}"));
        format!(
            "engine/{m}/n={}/k={}/p={:?}/s={:?}",
            self.n, self.tracked, self.probes, self.split
        )
    }
}

type Batch = std::result::Result<Rc<Vec<FunctionalSample>>, String>;

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    runs: RefCell<Vec<(RunSpec, Batch)>>,
    artifacts: RefCell<Vec<Artifact>>,
}

fn n_pow(n: usize, p: f64) -> f64 {
    (n as f64).powf(p)
}

impl Context<'_> {
    fn check<F>(&self, id: &str, criterion: u8, kind: StatisticKind, law: &str, f: F) -> ComparisonReport
    where
        F: FnOnce() -> Result<Obs>,
    {
        let threshold = self.cfg.threshold(id);
        let base = ComparisonReport::new(id, criterion, kind, law);
        match f() {
            Ok(o) => base.judged(o.value, threshold).samples(o.n).note(o.notes),
            Err(e) => base.failed(&e, threshold),
        }
    }

    fn add_artifact(&self, name: &str, data: Result<Vec<u8>>) {
        match data {
            Ok(data) => self.artifacts.borrow_mut().push(Artifact {
                name: name.to_string(),
                data,
            }),
            Err(e) => log::warn!("export {name} failed: {e}"),
        }
    }

    /// Engine batch, shared by every suite asking for the same spec.
    fn engine(&self, spec: RunSpec, artifact: &str) -> Result<Rc<Vec<FunctionalSample>>> {
        let found = self
            .runs
            .borrow()
            .iter()
            .find(|(s, _)| *s == spec)
            .map(|(_, b)| b.clone());
        let batch = match found {
            Some(b) => b,
            None => {
                info!("engine batch {} x{}", spec.label(), spec.reps);
                let b = self.simulate(&spec).map(Rc::new).map_err(|e| e.to_string());
                if let Ok(samples) = &b {
                    self.add_artifact(&format!("samples_{artifact}"), export::functional_samples_csv(samples));
                }
                self.runs.borrow_mut().push((spec, b.clone()));
                b
            }
        };
        batch.map_err(Error::Upstream)
    }

    fn simulate(&self, spec: &RunSpec) -> Result<Vec<FunctionalSample>> {
        let measure = match spec.alpha {
            Some(a) => Measure::beta(a)?,
            None => Measure::kingman(),
        };
        let sim = Simulator::with_max_n(&measure, spec.n, self.cfg.max_n)?;
        let mut req = Request::new(spec.tracked, spec.probes.clone());
        req.split = spec.split;
        run_replicates(self.cfg.seed, &spec.label(), spec.reps, self.cfg.workers, |_, rng| {
            Ok(sim.simulate(&req, rng)?.sample)
        })
    }

    fn n_reps(&self, suite: Suite) -> (usize, usize) {
        // validated up front
        (
            self.cfg.suite_n(suite).unwrap_or(2),
            self.cfg.suite_reps(suite).unwrap_or(1),
        )
    }

    fn count(&self, key: &str) -> usize {
        self.cfg.count(key).unwrap_or(1)
    }

    // ----------------------------------------------------------------- 1

    fn rates(&self) -> Vec<ComparisonReport> {
        let bmax = self.count("rates.bmax").max(3) as u64;
        let alphas = [1.2, 1.5, 1.8];
        let lam = self.check("rates.lambda", 1, StatisticKind::Moment, "rates_quadrature", || {
            let mut worst: f64 = 0.0;
            let mut count = 0;
            for alpha in alphas {
                let m = Measure::beta(alpha)?;
                let norm = power_integral(1.0 - alpha, alpha - 1.0)?;
                for b in 2..=bmax {
                    for k in 2..=b {
                        let want = power_integral(k as f64 - 1.0 - alpha, (b - k) as f64 + alpha - 1.0)? / norm;
                        let got = lambda_bk(&m, b, k)?;
                        worst = worst.max((got / want - 1.0).abs());
                        let want1 = ln_binomial::<f64>(b - 1, k - 1).exp() * want;
                        let got1 = singleton_merge_rate(&m, b, k)?;
                        worst = worst.max((got1 / want1 - 1.0).abs());
                        count += 1;
                    }
                }
            }
            Ok(Obs::new(worst, count, format!("max relative error, b <= {bmax}, alpha in {alphas:?}")))
        });
        let cons = self.check("rates.consistency", 1, StatisticKind::Moment, "rates_recursion", || {
            let mut worst: f64 = 0.0;
            let mut count = 0;
            for alpha in alphas {
                let m = Measure::beta(alpha)?;
                for b in 2..bmax {
                    for k in 2..=b {
                        let lhs = lambda_bk(&m, b + 1, k)? + lambda_bk(&m, b + 1, k + 1)?;
                        let rhs = lambda_bk(&m, b, k)?;
                        worst = worst.max((lhs / rhs - 1.0).abs());
                        count += 1;
                    }
                }
            }
            Ok(Obs::new(worst, count, "max relative defect of the consistency identity"))
        });
        vec![lam, cons]
    }

    // ----------------------------------------------------------------- 2, 3

    fn external_spec(&self, n: usize) -> RunSpec {
        let (_, reps) = self.n_reps(Suite::External);
        RunSpec::beta(self.cfg.alpha, n, reps, 2, Vec::new())
    }

    fn scaled_t(&self, samples: &[FunctionalSample], n: usize, i: usize) -> Vec<f64> {
        let c = n_pow(n, self.cfg.alpha - 1.0);
        samples.iter().map(|s| s.t_ext[i] * c).collect()
    }

    fn external(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let (n, _) = self.n_reps(Suite::External);
        let small = self.count("external.n_small");
        let ks_at = |n: usize, artifact: &str| -> Result<(f64, usize)> {
            let s = self.engine(self.external_spec(n), artifact)?;
            let t = self.scaled_t(&s, n, 0);
            Ok((ks_statistic_try(&t, |x| external_length_cdf(alpha, x))?, t.len()))
        };
        let ks = self.check("external.ks", 2, StatisticKind::Ks, "external_length", || {
            let (d, m) = ks_at(n, "external")?;
            Ok(Obs::new(d, m, format!("n={n}, scaled by n^(alpha-1)")))
        });
        let order = self.check("external.ordering", 2, StatisticKind::Ks, "external_length", || {
            let (big, m) = ks_at(n, "external")?;
            let (little, _) = ks_at(small, "external_small")?;
            let violated = if little > big { 0.0 } else { 1.0 };
            Ok(Obs::new(
                violated,
                m,
                format!("KS at n={small}: {little:.5}, at n={n}: {big:.5}; value counts order violations"),
            ))
        });
        vec![ks, order]
    }

    fn joint(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let (n, _) = self.n_reps(Suite::External);
        let grid = self.count("joint.grid");
        let pair = || -> Result<(Vec<f64>, Vec<f64>)> {
            let s = self.engine(self.external_spec(n), "external")?;
            Ok((self.scaled_t(&s, n, 0), self.scaled_t(&s, n, 1)))
        };
        let ks2 = self.check("joint.ks2d", 3, StatisticKind::Ks, "external_length x external_length", || {
            let (a, b) = pair()?;
            let f = |x: f64| external_length_cdf(alpha, x).unwrap_or(f64::NAN);
            let d = ks_2d_product(&a, &b, f, f, grid)?;
            Ok(Obs::new(d, a.len(), format!("(T_1, T_2) at n={n}, {grid}x{grid} quantile grid")))
        });
        let corr = self.check("joint.corr", 3, StatisticKind::Moment, "independence", || {
            let (a, b) = pair()?;
            let r = correlation(&a, &b)?;
            Ok(Obs::new(r.abs(), a.len(), format!("corr(T_1, T_2) = {r:.5}")))
        });
        vec![ks2, corr]
    }

    // ----------------------------------------------------------------- 4, 6

    /// Shared by the merger and beta suites: two tracked labels and a block
    /// probe at `n^{1-α} t`.
    fn probe_spec(&self, suite: Suite) -> RunSpec {
        let (n, reps) = self.n_reps(suite);
        let t = self.cfg.param("beta.t");
        let probe = Scaling::KProbe.apply(self.cfg.alpha, n, t);
        RunSpec::beta(self.cfg.alpha, n, reps, 2, vec![probe])
    }

    fn merger(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let cap = self.count("merger.cap") as u64;
        let spec = self.probe_spec(Suite::Merger);
        let n = spec.n;
        let tv = self.check("merger.tv", 4, StatisticKind::Tv, "merger_q", || {
            let s = self.engine(spec.clone(), "merger")?;
            let q: Vec<u64> = s.iter().map(|x| x.q as u64).collect();
            let emp = lumped_empirical(&q, 2, cap)?;
            let law = lumped_law(|k| q_pmf(alpha, k), 2, cap)?;
            Ok(Obs::new(discrete_tv(&emp, &law)?, q.len(), format!("n={n}, cells 2..={cap} and >{cap}")))
        });
        let corr = self.check("merger.corr", 4, StatisticKind::Moment, "independence", || {
            let s = self.engine(spec.clone(), "merger")?;
            let q: Vec<f64> = s.iter().map(|x| x.q as f64).collect();
            let t = self.scaled_t(&s, n, 0);
            let r = correlation(&q, &t)?;
            Ok(Obs::new(r.abs(), q.len(), format!("corr(Q, scaled T_1) = {r:.5}")))
        });
        vec![tv, corr]
    }

    fn beta(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let t = self.cfg.param("beta.t");
        let cap = self.count("beta.cap") as u64;
        let spec = self.probe_spec(Suite::Beta);
        let n = spec.n;
        let tv = self.check("beta.tv", 6, StatisticKind::Tv, "beta_t", || {
            let s = self.engine(spec, "beta")?;
            // size of the block holding label 2 at the probe
            let sizes: Vec<u64> = s.iter().map(|x| x.tracked_size_probe[0][1] as u64).collect();
            let emp = lumped_empirical(&sizes, 1, cap)?;
            let table = beta_t_pmf_table(alpha, t, cap as usize)?;
            let law = lumped_law(|k| Ok(table[k as usize - 1]), 1, cap)?;
            Ok(Obs::new(
                discrete_tv(&emp, &law)?,
                sizes.len(),
                format!("n={n}, t={t}, cells 1..={cap} and >{cap}"),
            ))
        });
        let routes = self.check("beta.routes", 6, StatisticKind::Moment, "beta_t", || {
            let kmax = self.count("beta.route_kmax");
            let funcs = SlackFunctions::new(alpha)?;
            let table = beta_t_pmf_table(alpha, t, kmax)?;
            let mut worst: f64 = 0.0;
            for k in 1..=kmax {
                let other = beta_t_pmf_slack(&funcs, t, k as u64)?;
                worst = worst.max((other - table[k - 1]).abs());
            }
            Ok(Obs::new(worst, kmax, "max |pgf route - Slack route| for k <= route_kmax"))
        });
        vec![tv, routes]
    }

    // ----------------------------------------------------------------- 5

    fn dust(&self) -> Vec<ComparisonReport> {
        let a = self.cfg.param("dust.alpha");
        let reps = self.count("dust.reps");
        let lo = self.count("dust.n_min");
        let hi = self.count("dust.n_max");
        vec![self.check("dust.median_order", 5, StatisticKind::Moment, "merger_q_dust", || {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("dust.alpha must lie in (0, 1), got {a}")));
            }
            let mut ladder = vec![lo];
            while ladder.last().is_some_and(|&n| n * 10 <= hi) {
                ladder.push(ladder.last().unwrap() * 10);
            }
            let mut medians = Vec::new();
            for &n in &ladder {
                let s = self.engine(RunSpec::beta(a, n, reps, 1, Vec::new()), &format!("dust_{n}"))?;
                let q: Vec<f64> = s.iter().map(|x| x.q as f64).collect();
                medians.push(median(&q)?);
            }
            let violations = medians.windows(2).filter(|w| w[1] <= w[0]).count();
            let desc: Vec<String> = ladder.iter().zip(&medians).map(|(n, m)| format!("n={n}: {m}")).collect();
            Ok(Obs::new(
                violations as f64,
                reps * ladder.len(),
                format!("median Q, alpha={a}: {}", desc.join(", ")),
            ))
        })]
    }

    // ----------------------------------------------------------------- 7, 8

    fn clade(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let (n, reps) = self.n_reps(Suite::Clade);
        let lmax = self.count("clade.lmax").max(2);
        let pmf = self.check("clade.pmf", 7, StatisticKind::Moment, "minimal_clade_y", || {
            let s = self.engine(RunSpec::beta(alpha, n, reps, 1, Vec::new()), "clade")?;
            let table = y_pmf_table(alpha, lmax, self.cfg.tolerance)?;
            let m = s.len() as f64;
            let mut worst: f64 = 0.0;
            for l in 2..=lmax {
                let emp = s.iter().filter(|x| x.y as usize == l).count() as f64 / m;
                worst = worst.max((emp - table.pmf[l - 2]).abs());
            }
            Ok(Obs::new(worst, s.len(), format!("n={n}, max |P(Y=l) - p_l| over l=2..={lmax}")))
        });
        let uniform = self
            .check("clade.pmf_uniform_pick", 7, StatisticKind::Moment, "minimal_clade_y_uniform_pick", || {
                let s = self.engine(RunSpec::beta(alpha, n, reps, 1, Vec::new()), "clade")?;
                let table = y_uniform_pick_pmf_table(alpha, lmax, self.cfg.tolerance)?;
                let m = s.len() as f64;
                let mut worst: f64 = 0.0;
                for l in 2..=lmax {
                    let emp = s.iter().filter(|x| x.y as usize == l).count() as f64 / m;
                    worst = worst.max((emp - table.pmf[l - 2]).abs());
                }
                Ok(Obs::new(
                    worst,
                    s.len(),
                    "same sample against the law with uniformly picked (not size-biased) blocks",
                ))
            })
            .diagnostic();
        let kn = self.count("clade.kingman_n");
        let kreps = self.count("clade.kingman_reps");
        let kingman = self.check("clade.kingman_tv", 7, StatisticKind::Tv, "kingman_clade", || {
            let spec = RunSpec {
                alpha: None,
                n: kn,
                reps: kreps,
                tracked: 1,
                probes: Vec::new(),
                split: None,
            };
            let s = self.engine(spec, "kingman")?;
            let y: Vec<u64> = s.iter().map(|x| x.y as u64).collect();
            let cap = (kn as u64 - 1).max(3);
            let emp = lumped_empirical(&y, 2, cap)?;
            let law = lumped_law(|k| Ok(4.0 / ((k + 1) * k * (k - 1)) as f64), 2, cap)?;
            Ok(Obs::new(discrete_tv(&emp, &law)?, y.len(), format!("n={kn}, law 4/((k+1)k(k-1))")))
        });
        vec![pmf, uniform, kingman]
    }

    fn ytail(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let lo = self.cfg.param("ytail.lo");
        let hi = self.cfg.param("ytail.hi");
        let sim_hi = self.cfg.param("ytail.sim_hi");
        let points = self.count("ytail.points");
        let target = -(alpha - 1.0).powi(2);
        let numeric = self.check("ytail.numeric_slope", 8, StatisticKind::TailSlope, "minimal_clade_y", || {
            let table = y_pmf_table(alpha, hi.ceil() as usize, self.cfg.tolerance)?;
            let mut cum = vec![0.0; table.pmf.len() + 2];
            for l in 2..cum.len() {
                cum[l] = cum[l - 1] + table.pmf[l - 2];
            }
            let est = tail_slope_survival(|k| Ok(1.0 - cum[k as usize]), lo, hi, points, true)?;
            Ok(Obs::new(
                est.relative_error(target),
                est.points,
                format!("slope {:.5} vs {target} over [{lo}, {hi}]", est.slope),
            ))
        });
        let (n, reps) = self.n_reps(Suite::Ytail);
        let sim = self.check("ytail.sim_slope", 8, StatisticKind::TailSlope, "minimal_clade_y", || {
            let s = self.engine(RunSpec::beta(alpha, n, reps, 1, Vec::new()), "ytail")?;
            let y: Vec<f64> = s.iter().map(|x| x.y as f64).collect();
            let est = tail_slope(&y, lo, sim_hi, points, true)?;
            Ok(Obs::new(
                est.relative_error(target),
                y.len(),
                format!(
                    "slope {:.5} (se {:.5}) vs {target} over [{lo}, {sim_hi}], n={n}",
                    est.slope, est.stderr
                ),
            ))
        });
        let uniform = self
            .check("ytail.sim_slope_uniform_pick", 8, StatisticKind::TailSlope, "minimal_clade_y_uniform_pick", || {
                let s = self.engine(RunSpec::beta(alpha, n, reps, 1, Vec::new()), "ytail")?;
                let y: Vec<f64> = s.iter().map(|x| x.y as f64).collect();
                let est = tail_slope(&y, lo, sim_hi, points, true)?;
                let want = 1.0 - alpha;
                Ok(Obs::new(
                    est.relative_error(want),
                    y.len(),
                    format!("same fit against {want}, the exponent of the uniform-pick law"),
                ))
            })
            .diagnostic();
        let constant = self.check("ytail.constant", 8, StatisticKind::Moment, "minimal_clade_y", || {
            let t = y_tail(alpha)?;
            Ok(Obs::new(
                (t.moment / t.moment_closed_form - 1.0).abs(),
                1,
                format!("tail constant {:.10}, quadrature vs Beta-function moment", t.constant),
            ))
        });
        vec![numeric, sim, uniform, constant]
    }

    // ----------------------------------------------------------------- 9, 10

    fn largest_spec(&self, suite: Suite) -> (RunSpec, f64) {
        let (n, reps) = self.n_reps(suite);
        let t = self.cfg.param("gumbel.t");
        let probe = Scaling::WProbe.apply(self.cfg.alpha, n, t);
        (RunSpec::beta(self.cfg.alpha, n, reps, 1, vec![probe]), probe)
    }

    fn gumbel(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let t = self.cfg.param("gumbel.t");
        let (spec, probe) = self.largest_spec(Suite::Gumbel);
        let n = spec.n;
        let scale = n_pow(n, 1.0 / alpha);
        let engine_w = || -> Result<Vec<f64>> {
            let s = self.engine(spec.clone(), "gumbel")?;
            Ok(s.iter().map(|x| x.w_probe[0] as f64 / scale).collect())
        };
        let ks = self.check("gumbel.ks", 9, StatisticKind::Ks, "gumbel_w", || {
            let w = engine_w()?;
            let d = ks_statistic_try(&w, |x| gumbel_w_cdf(alpha, t, x))?;
            Ok(Obs::new(d, w.len(), format!("n={n}, probe {probe:.6e}, W/n^(1/alpha)")))
        });
        let sreps = self.count("gumbel.surrogate_reps");
        let bins = self.count("gumbel.bins").max(2);
        let surrogate = self.check("gumbel.surrogate_tv", 9, StatisticKind::Tv, "gumbel_w", || {
            let w = engine_w()?;
            let dist = SlackDistribution::build(alpha, GridSpec::default())?;
            let label = format!("surrogate/beta{alpha:?}/n={n}/s={probe:?}");
            let ws = run_replicates(self.cfg.seed, &label, sreps, self.cfg.workers, |_, rng| {
                let draw = small_time_frequencies(probe, &dist, rng)?;
                Ok(paintbox(&draw.freqs, n, 0, rng)?.largest() as f64 / scale)
            })?;
            {
                let mut rng = stream(self.cfg.seed, &label, 0);
                let draw = small_time_frequencies(probe, &dist, &mut rng)?;
                self.add_artifact("frequencies", export::frequencies_csv(&draw.freqs));
            }
            let mut sorted = w.clone();
            sorted.sort_by(f64::total_cmp);
            let edges: Vec<f64> = (1..bins).map(|j| sorted[j * sorted.len() / bins]).collect();
            let binned = |xs: &[f64]| {
                let mut c = vec![0.0; bins];
                for &x in xs {
                    c[edges.partition_point(|&e| e < x)] += 1.0;
                }
                c.iter().map(|v| v / xs.len() as f64).collect::<Vec<_>>()
            };
            let tv = discrete_tv(&binned(&w), &binned(&ws))?;
            let ks_s = ks_statistic_try(&ws, |x| gumbel_w_cdf(alpha, t, x))?;
            Ok(Obs::new(
                tv,
                ws.len(),
                format!("{bins} engine-quantile bins; surrogate KS vs limit {ks_s:.4}"),
            ))
        });
        vec![ks, surrogate]
    }

    fn wtilde(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let (spec, _) = self.largest_spec(Suite::Wtilde);
        let n = spec.n;
        let scale = n_pow(n, 1.0 / alpha);
        vec![self.check("wtilde.ks", 10, StatisticKind::Ks, "wtilde", || {
            let s = self.engine(spec, "wtilde")?;
            let w: Vec<f64> = s.iter().map(|x| x.w_tilde as f64 / scale).collect();
            let d = ks_statistic_try(&w, |x| wtilde_cdf_with(alpha, x, self.cfg.tolerance.max(1e-8)))?;
            Ok(Obs::new(d, w.len(), format!("n={n}, W_tilde/n^(1/alpha)")))
        })]
    }

    // ----------------------------------------------------------------- 11

    fn blocks(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let (n, reps) = self.n_reps(Suite::Blocks);
        let t = self.cfg.param("blocks.t");
        let probe = Scaling::KProbe.apply(alpha, n, t);
        let m = n / 2;
        let spec = RunSpec {
            split: Some(m),
            ..RunSpec::beta(alpha, n, reps, 1, vec![probe])
        };
        let counts = || -> Result<(Rc<Vec<FunctionalSample>>, Vec<f64>)> {
            let s = self.engine(spec.clone(), "blocks")?;
            let k = s.iter().map(|x| x.k_probe[0] as f64).collect();
            Ok((s, k))
        };
        let mean = self.check("blocks.mean", 11, StatisticKind::Moment, "block_count", || {
            let (_, k) = counts()?;
            let (mk, _) = mean_var(&k)?;
            let want = block_count_limits(alpha, t)?.mean_ratio;
            let got = mk / n as f64;
            Ok(Obs::new((got / want - 1.0).abs(), k.len(), format!("mean K/n {got:.6} vs {want:.6}, n={n}")))
        });
        let var = self.check("blocks.var", 11, StatisticKind::Moment, "block_count", || {
            let (_, k) = counts()?;
            let (_, vk) = mean_var(&k)?;
            let want = block_count_limits(alpha, t)?.var_ratio;
            let got = vk / n as f64;
            Ok(Obs::new(
                (got / want - 1.0).abs(),
                k.len(),
                format!("sample variance/n {got:.6} vs {want:.6}"),
            ))
        });
        let atoms = self.check("blocks.atoms", 11, StatisticKind::Moment, "surrogate_atoms", || {
            let label = format!("atoms/beta{alpha:?}/n={n}/s={probe:?}");
            let g = surrogate_atom_mean(alpha, probe);
            let d = run_replicates(self.cfg.seed, &label, reps, self.cfg.workers, |_, rng| {
                Ok(surrogate_atom_count(alpha, probe, rng)? as f64 / g)
            })?;
            let (md, _) = mean_var(&d)?;
            Ok(Obs::new((md - 1.0).abs(), d.len(), format!("mean atoms/gamma {md:.6}, gamma {g:.1}")))
        });
        let split = self
            .check("blocks.split_var", 11, StatisticKind::Moment, "block_count", || {
                let (s, _) = counts()?;
                let d: Vec<f64> = s
                    .iter()
                    .map(|x| {
                        let (a, b) = x.split_probe[0];
                        (a as f64 - b as f64).powi(2)
                    })
                    .collect();
                let got = d.iter().sum::<f64>() / d.len() as f64 / 2.0 / m as f64;
                let t_half = t * 2f64.powf(1.0 - alpha);
                let want = fixed_n_variance_ratio(alpha, t_half)?;
                Ok(Obs::new(
                    (got / want - 1.0).abs(),
                    d.len(),
                    format!("E[(K_A - K_B)^2]/(2m) {got:.6} vs fixed-n conditional variance at t*2^(1-alpha) {want:.6}, m={m}"),
                ))
            })
            .diagnostic();
        vec![mean, var, atoms, split]
    }

    // ----------------------------------------------------------------- 12, 13

    fn slack(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let dist = SlackDistribution::build(alpha, GridSpec::default());
        let dist = match dist {
            Ok(d) => Some(d),
            Err(e) => {
                let ids = ["slack.mean", "slack.tail_slope", "slack.laplace"];
                let mut out: Vec<ComparisonReport> = ids
                    .iter()
                    .map(|id| {
                        ComparisonReport::new(id, 12, StatisticKind::Moment, "slack").failed(&e, self.cfg.threshold(id))
                    })
                    .collect();
                out.push(self.q_from_beta());
                return out;
            }
        };
        let dist = dist.unwrap();
        self.add_artifact("slack_table", export::slack_table_csv(&dist.table()));
        let draws = self.count("slack.draws");
        // one sequential stream: the result does not depend on the worker count
        let mut rng = stream(self.cfg.seed, "slack", 0);
        let xs: Vec<f64> = (0..draws).map(|_| dist.sample(&mut rng)).collect();
        let mean = self.check("slack.mean", 12, StatisticKind::Moment, "slack", || {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            Ok(Obs::new((m - 1.0).abs(), xs.len(), format!("sample mean {m:.5}")))
        });
        let slope = self.check("slack.tail_slope", 12, StatisticKind::TailSlope, "slack", || {
            let lo = self.cfg.param("slack.lo");
            let hi = self.cfg.param("slack.hi");
            let est = tail_slope(&xs, lo, hi, self.count("slack.points"), false)?;
            Ok(Obs::new(
                est.relative_error(-alpha),
                xs.len(),
                format!("slope {:.5} (se {:.5}) over [{lo}, {hi}]", est.slope, est.stderr),
            ))
        });
        let lap = self.check("slack.laplace", 12, StatisticKind::Moment, "slack", || {
            let mut worst: f64 = 0.0;
            for lam in [0.1, 1.0, 10.0] {
                worst = worst.max((dist.table_laplace(lam) - laplace(alpha, lam)?).abs());
            }
            Ok(Obs::new(worst, dist.nodes(), "table Laplace transform vs closed form, lambda in {0.1, 1, 10}"))
        });
        vec![mean, slope, lap, self.q_from_beta()]
    }

    fn q_from_beta(&self) -> ComparisonReport {
        let alpha = self.cfg.alpha;
        let ts = self.cfg.param("slack.t_small");
        let kmax = self.count("slack.kmax").max(2) as u64;
        self.check("slack.q_from_beta", 12, StatisticKind::Moment, "merger_q", || {
            let mut worst: f64 = 0.0;
            for k in 2..=kmax {
                worst = worst.max((q_from_beta_limit(alpha, k, ts)? / q_pmf(alpha, k)? - 1.0).abs());
            }
            Ok(Obs::new(worst, (kmax - 1) as usize, format!("max relative error, k <= {kmax}, t = {ts:e}")))
        })
    }

    fn qlaplace(&self) -> Vec<ComparisonReport> {
        let alpha = self.cfg.alpha;
        let lams = [0.1_f64, 1.0];
        let series = self.check("qlaplace.series", 13, StatisticKind::Moment, "merger_q", || {
            let mut worst: f64 = 0.0;
            for lam in lams {
                // truncation error below e^{-50}
                let kmax = (50.0 / lam).ceil() as u64 + 2;
                let mut sum = 0.0;
                for k in (2..=kmax).rev() {
                    sum += q_pmf(alpha, k)? * (-lam * k as f64).exp();
                }
                worst = worst.max((q_laplace(alpha, lam)? - sum).abs());
            }
            Ok(Obs::new(worst, lams.len(), "closed form vs truncated series, lambda in {0.1, 1}"))
        });
        let ts = self.cfg.param("qlaplace.t_small");
        let limit = self.check("qlaplace.limit", 13, StatisticKind::Moment, "merger_q", || {
            let mut worst: f64 = 0.0;
            for lam in lams {
                worst = worst.max((q_laplace_from_beta_limit(alpha, lam, ts)? / q_laplace(alpha, lam)? - 1.0).abs());
            }
            Ok(Obs::new(worst, lams.len(), format!("beta(t) limit at t = {ts:e} vs closed form")))
        });
        vec![series, limit]
    }
}

/// `∫_0^1 x^p (1-x)^q dx` for `p, q > -1`; a negative exponent is removed on
/// its half interval by a power substitution.
fn power_integral(p: f64, q: f64) -> Result<f64> {
    let settings = QuadSettings {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let half = |p: f64, q: f64| -> Result<f64> {
        if p < 0.0 {
            let e = 1.0 / (p + 1.0);
            Ok(integrate(|u| e * (1.0 - u.powf(e)).powf(q), 0.0, 0.5_f64.powf(p + 1.0), settings)?.value)
        } else {
            Ok(integrate(|x| x.powf(p) * (1.0 - x).powf(q), 0.0, 0.5, settings)?.value)
        }
    };
    Ok(half(p, q)? + half(q, p)?)
}
