//! `coalab`: simulation, limit laws and validation suites for
//! Beta(2-α, α) coalescents.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalab::stats::{ExperimentConfig, Scaling};
use coalab::Error;

#[derive(Parser, Debug)]
#[command(name = "coalab", version, about = "Beta(2-alpha, alpha) n-coalescent laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merger rates lambda_{b,k}, lambda_{1,b,k} and their totals.
    Rates {
        /// Number of blocks.
        #[arg(long)]
        b: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate a limit law.
    Law {
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate replicates and dump their functionals.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Draw ranked frequencies from the small-time surrogate.
    Surrogate {
        #[command(flatten)]
        common: Common,
    },
    /// Run validation suites against the limit laws.
    Validate {
        /// Comma-separated suite names, or `all`.
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the Slack distribution.
    SlackTable {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Which {
    /// Merger multiplicity Q.
    Q,
    /// Scaled external branch length T.
    T,
    /// Block size beta(t) at time t (first --probe-time, default 1).
    Beta,
    /// Minimal clade size Y.
    Y,
    /// Largest block W(t).
    Gumbel,
    /// Largest block at the first merger of label 1.
    Wtilde,
    /// Limit of K/n at time t.
    Blocks,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Args, Debug, Default)]
pub struct Common {
    #[arg(long)]
    alpha: Option<f64>,
    /// Sample size (overrides every suite's own n).
    #[arg(long)]
    n: Option<String>,
    /// Replicates (overrides every suite's own count).
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Probe time, before scaling; repeatable.
    #[arg(long = "probe-time")]
    probe_time: Vec<f64>,
    #[arg(long, value_enum)]
    scaling: Option<ScalingArg>,
    /// Labels 1..=tracked whose external lengths are recorded.
    #[arg(long)]
    tracked: Option<usize>,
    /// Run directory for CSV tables, reports and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Truncation of discrete tables; grid size of continuous ones.
    #[arg(long)]
    kmax: Option<usize>,
    /// Relative tolerance of numeric evaluations.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScalingArg {
    Raw,
    KProbe,
    WProbe,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Raw => Scaling::Raw,
            ScalingArg::KProbe => Scaling::KProbe,
            ScalingArg::WProbe => Scaling::WProbe,
        }
    }
}

/// Exit statuses.
pub const EXIT_COMPARISON: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Maps a library error onto an exit status.
pub fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Resource { .. } | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

impl Common {
    /// Config file, then `COALAB_MAX_N`, then flags.
    fn resolve(&self, suite: Option<&str>) -> coalab::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_kv_str(&text)?;
        }
        if let Ok(v) = std::env::var("COALAB_MAX_N") {
            cfg.set("max_n", v.trim())
                .map_err(|e| Error::Config(format!("COALAB_MAX_N: {e}")))?;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(n) = &self.n {
            cfg.set("n", n)?;
        }
        if let Some(r) = &self.reps {
            cfg.set("reps", r)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w.max(1);
        }
        if !self.probe_time.is_empty() {
            cfg.probe_times = self.probe_time.clone();
        }
        if let Some(s) = self.scaling {
            cfg.scaling = s.into();
        }
        if let Some(t) = self.tracked {
            cfg.tracked = t;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(k) = self.kmax {
            cfg.kmax = k;
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        if let Some(s) = suite {
            cfg.set("suite", s)?;
        }
        if let Some(n) = cfg.n {
            if n > cfg.max_n {
                return Err(Error::Resource { n, max: cfg.max_n });
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rates { b, common } => common.resolve(None).and_then(|c| commands::rates(&c, *b)),
        Command::Law { which, common } => common.resolve(None).and_then(|c| commands::law(&c, *which)),
        Command::Simulate { common } => common.resolve(None).and_then(|c| commands::simulate(&c)),
        Command::Surrogate { common } => common.resolve(None).and_then(|c| commands::surrogate(&c)),
        Command::Validate { suite, common } => common
            .resolve(suite.as_deref())
            .and_then(|c| commands::validate(&c)),
        Command::SlackTable { common } => common.resolve(None).and_then(|c| commands::slack_table(&c)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
