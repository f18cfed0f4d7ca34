//! Experiment configuration as flat `key = value` text.
//!
//! Sizes and thresholds of every suite are plain numeric keys such as
//! `gumbel.n` or `threshold.merger.tv`; their shipped defaults are the
//! acceptance settings. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::DEFAULT_MAX_N;
use crate::error::{Error, Result};
use crate::special::gamma;

/// How probe times given on the command line map to coalescent time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    Raw,
    /// `n^{1-α} t`, the block-count scale.
    KProbe,
    /// `(α-1)αΓ(α) n^{1-α} t`, the largest-block scale.
    WProbe,
}

impl Scaling {
    pub fn apply(self, alpha: f64, n: usize, t: f64) -> f64 {
        let base = (n as f64).powf(1.0 - alpha);
        match self {
            Scaling::Raw => t,
            Scaling::KProbe => base * t,
            Scaling::WProbe => (alpha - 1.0) * alpha * gamma(alpha) * base * t,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scaling::Raw => "raw",
            Scaling::KProbe => "k-probe",
            Scaling::WProbe => "w-probe",
        }
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Scaling::Raw),
            "k-probe" => Ok(Scaling::KProbe),
            "w-probe" => Ok(Scaling::WProbe),
            _ => Err(Error::Config(format!("unknown scaling '{s}' (raw, k-probe, w-probe)"))),
        }
    }
}

/// Validation suites; `all` expands to every one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Rates,
    External,
    Joint,
    Merger,
    Dust,
    Beta,
    Clade,
    Ytail,
    Gumbel,
    Wtilde,
    Blocks,
    Slack,
    Qlaplace,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Rates,
        Suite::External,
        Suite::Joint,
        Suite::Merger,
        Suite::Dust,
        Suite::Beta,
        Suite::Clade,
        Suite::Ytail,
        Suite::Gumbel,
        Suite::Wtilde,
        Suite::Blocks,
        Suite::Slack,
        Suite::Qlaplace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rates => "rates",
            Suite::External => "external",
            Suite::Joint => "joint",
            Suite::Merger => "merger",
            Suite::Dust => "dust",
            Suite::Beta => "beta",
            Suite::Clade => "clade",
            Suite::Ytail => "ytail",
            Suite::Gumbel => "gumbel",
            Suite::Wtilde => "wtilde",
            Suite::Blocks => "blocks",
            Suite::Slack => "slack",
            Suite::Qlaplace => "qlaplace",
        }
    }

    /// Parses a comma-separated list; `all` selects every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for name in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            if name == "all" {
                out.extend(Suite::ALL);
                continue;
            }
            let suite = Suite::ALL
                .into_iter()
                .find(|x| x.name() == name)
                .ok_or_else(|| Error::Config(format!("unknown suite '{name}'")))?;
            out.push(suite);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// (key, default); sizes are stored as f64 and validated on use
const PARAMS: &[(&str, f64)] = &[
    ("rates.bmax", 50.0),
    ("external.n", 1e4),
    ("external.reps", 1e4),
    ("external.n_small", 100.0),
    ("joint.grid", 50.0),
    ("merger.n", 1e4),
    ("merger.reps", 2e4),
    ("merger.cap", 15.0),
    ("dust.alpha", 0.5),
    ("dust.reps", 2e3),
    ("dust.n_min", 100.0),
    ("dust.n_max", 1e4),
    ("beta.n", 1e4),
    ("beta.reps", 2e4),
    ("beta.t", 1.0),
    ("beta.cap", 30.0),
    ("beta.route_kmax", 30.0),
    ("clade.n", 5e3),
    ("clade.reps", 5e4),
    ("clade.lmax", 10.0),
    ("clade.kingman_n", 100.0),
    ("clade.kingman_reps", 5e4),
    ("ytail.n", 1e4),
    ("ytail.reps", 1e5),
    ("ytail.lo", 10.0),
    ("ytail.hi", 300.0),
    ("ytail.sim_hi", 200.0),
    ("ytail.points", 20.0),
    ("gumbel.n", 1e5),
    ("gumbel.reps", 5e3),
    ("gumbel.t", 1.0),
    ("gumbel.surrogate_reps", 1e3),
    ("gumbel.bins", 5.0),
    ("wtilde.n", 1e5),
    ("wtilde.reps", 5e3),
    ("blocks.n", 1e5),
    ("blocks.reps", 1e3),
    ("blocks.t", 1.0),
    ("slack.draws", 1e6),
    ("slack.lo", 10.0),
    ("slack.hi", 1e3),
    ("slack.points", 20.0),
    ("slack.t_small", 1e-4),
    ("slack.kmax", 5.0),
    ("qlaplace.t_small", 1e-4),
    ("threshold.rates.lambda", 1e-10),
    ("threshold.rates.consistency", 1e-12),
    ("threshold.external.ks", 0.03),
    ("threshold.external.ordering", 0.0),
    ("threshold.joint.ks2d", 0.04),
    ("threshold.joint.corr", 0.05),
    ("threshold.merger.tv", 0.02),
    ("threshold.merger.corr", 0.05),
    ("threshold.dust.median_order", 0.0),
    ("threshold.beta.tv", 0.03),
    ("threshold.beta.routes", 1e-8),
    ("threshold.clade.pmf", 0.01),
    ("threshold.clade.kingman_tv", 0.02),
    ("threshold.clade.pmf_uniform_pick", 0.01),
    ("threshold.ytail.numeric_slope", 0.15),
    ("threshold.ytail.sim_slope", 0.20),
    ("threshold.ytail.constant", 1e-8),
    ("threshold.ytail.sim_slope_uniform_pick", 0.20),
    ("threshold.gumbel.ks", 0.05),
    ("threshold.gumbel.surrogate_tv", 0.05),
    ("threshold.wtilde.ks", 0.06),
    ("threshold.blocks.mean", 0.02),
    ("threshold.blocks.var", 0.10),
    ("threshold.blocks.atoms", 0.02),
    ("threshold.blocks.split_var", 0.10),
    ("threshold.slack.mean", 0.02),
    ("threshold.slack.tail_slope", 0.05),
    ("threshold.slack.laplace", 1e-4),
    ("threshold.slack.q_from_beta", 0.01),
    ("threshold.qlaplace.series", 1e-8),
    ("threshold.qlaplace.limit", 0.01),
];

/// Everything a run needs; see the module docs for the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: f64,
    /// Overrides every suite's `<suite>.n` when set.
    pub n: Option<usize>,
    /// Overrides every suite's `<suite>.reps` when set.
    pub reps: Option<usize>,
    pub tracked: usize,
    pub probe_times: Vec<f64>,
    pub scaling: Scaling,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub kmax: usize,
    /// Relative tolerance of the numeric law evaluations.
    pub tolerance: f64,
    pub max_n: usize,
    params: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            n: None,
            reps: None,
            tracked: 1,
            probe_times: Vec::new(),
            scaling: Scaling::Raw,
            suites: Suite::ALL.to_vec(),
            seed: 42,
            workers: 1,
            out: None,
            kmax: 200,
            tolerance: 1e-9,
            max_n: DEFAULT_MAX_N,
            params: PARAMS.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Config(format!("{key} = '{v}': {e}")))
}

/// Integer keys also accept `1e4`-style values.
fn parse_count(key: &str, v: &str) -> Result<usize> {
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = parse(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
        Ok(x as usize)
    } else {
        Err(Error::Config(format!("{key} = '{v}' is not a count")))
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let v = v.trim().trim_matches('"');
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse(key, v)?,
            "n" => self.n = Some(parse_count(key, v)?),
            "reps" => self.reps = Some(parse_count(key, v)?),
            "tracked" => self.tracked = parse_count(key, v)?,
            "probe_time" | "probe_times" => {
                self.probe_times = v
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| parse(key, x))
                    .collect::<Result<_>>()?
            }
            "scaling" => self.scaling = v.parse()?,
            "suite" | "suites" => self.suites = Suite::parse_list(v)?,
            "seed" => self.seed = parse(key, v)?,
            "workers" => self.workers = parse_count(key, v)?.max(1),
            "out" => self.out = Some(PathBuf::from(v)),
            "kmax" => self.kmax = parse_count(key, v)?,
            "tolerance" => self.tolerance = parse(key, v)?,
            "max_n" => self.max_n = parse_count(key, v)?,
            _ => match self.params.get_mut(key) {
                Some(slot) => *slot = parse(key, v)?,
                None => return Err(Error::Config(format!("unknown key '{key}'"))),
            },
        }
        Ok(())
    }

    /// A suite parameter such as `beta.t`.
    pub fn param(&self, key: &str) -> f64 {
        *self
            .params
            .get(key)
            .unwrap_or_else(|| panic!("no parameter '{key}'"))
    }

    /// A suite parameter that must be a positive count.
    pub fn count(&self, key: &str) -> Result<usize> {
        let x = self.param(key);
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(Error::Config(format!("{key} = {x} must be a positive integer")))
        }
    }

    /// Threshold of the comparison `id`, e.g. `merger.tv`.
    pub fn threshold(&self, id: &str) -> f64 {
        self.param(&format!("threshold.{id}"))
    }

    /// Sample size of a suite, honouring the global override.
    pub fn suite_n(&self, suite: Suite) -> Result<usize> {
        match self.n {
            Some(n) => Ok(n),
            None => self.count(&format!("{}.n", suite.name())),
        }
    }

    /// Replicate count of a suite, honouring the global override.
    pub fn suite_reps(&self, suite: Suite) -> Result<usize> {
        match self.reps {
            Some(r) => Ok(r),
            None => self.count(&format!("{}.reps", suite.name())),
        }
    }

    /// Probe times mapped to coalescent time for sample size `n`.
    pub fn scaled_probes(&self, n: usize) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .probe_times
            .iter()
            .map(|&t| self.scaling.apply(self.alpha, n, t))
            .collect();
        p.sort_by(f64::total_cmp);
        p
    }

    /// Every key with its resolved value, in text form.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let mut m: BTreeMap<String, String> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), format!("{v}")))
            .collect();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        m.insert("alpha".into(), format!("{}", self.alpha));
        m.insert("n".into(), self.n.map(|x| x.to_string()).unwrap_or_default());
        m.insert("reps".into(), self.reps.map(|x| x.to_string()).unwrap_or_default());
        m.insert("tracked".into(), self.tracked.to_string());
        m.insert("probe_time".into(), list(&self.probe_times));
        m.insert("scaling".into(), self.scaling.name().into());
        m.insert(
            "suite".into(),
            self.suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        );
        m.insert("seed".into(), self.seed.to_string());
        m.insert("workers".into(), self.workers.to_string());
        m.insert(
            "out".into(),
            self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        m.insert("kmax".into(), self.kmax.to_string());
        m.insert("tolerance".into(), format!("{:e}", self.tolerance));
        m.insert("max_n".into(), self.max_n.to_string());
        m
    }
}
