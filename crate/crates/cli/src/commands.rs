use std::fs;
use std::io::Write;

use coalab::engine::{Request, Simulator};
use coalab::frequencies::{paintbox, small_time_frequencies};
use coalab::limits::{block_count_limits, LawHandle, LawKind, LimitSettings};
use coalab::montecarlo::run_replicates;
use coalab::rates::{lambda_bk, singleton_merge_rate, singleton_total_rate, total_rate};
use coalab::slack::{GridSpec, SlackDistribution};
use coalab::stats::export::{self, Artifact, Manifest};
use coalab::stats::{run_experiment, ComparisonReport, ExperimentConfig, Scaling};
use coalab::{Error, Measure, Result};
use log::info;

use crate::{Which, EXIT_COMPARISON, EXIT_NUMERIC};

const SIM_N: usize = 1000;
const SIM_REPS: usize = 100;

fn artifact(name: &str, data: Vec<u8>) -> Artifact {
    Artifact {
        name: name.to_string(),
        data,
    }
}

/// A closed pipe (`| head`) is not an error.
fn stdout_bytes(b: &[u8]) -> Result<()> {
    match std::io::stdout().write_all(b) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Writes the run directory, if one was given: every artifact, the
/// reports and `manifest.json`.
fn finish(cfg: &ExperimentConfig, command: &str, artifacts: &[Artifact], reports: Option<&[ComparisonReport]>) -> Result<()> {
    let Some(dir) = &cfg.out else {
        return Ok(());
    };
    export::write_artifacts(dir, artifacts)?;
    let mut names: Vec<String> = artifacts.iter().map(|a| format!("{}.csv", a.name)).collect();
    if let Some(reports) = reports {
        fs::write(dir.join("report.json"), export::report_json(reports)?)?;
        fs::write(dir.join("report.csv"), export::report_csv(reports)?)?;
        fs::write(dir.join("report.txt"), export::report_text(reports))?;
        names.extend(["report.json", "report.csv", "report.txt"].map(String::from));
    }
    let manifest = Manifest {
        tool: "coalab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: std::iter::once(command.to_string())
            .chain(std::env::args().skip(2))
            .collect::<Vec<_>>()
            .join(" "),
        seed: cfg.seed,
        config: cfg.resolved(),
        artifacts: names,
    };
    fs::write(dir.join("manifest.json"), manifest.to_json()?)?;
    info!("wrote {}", dir.display());
    Ok(())
}

pub fn rates(cfg: &ExperimentConfig, b: u64) -> Result<u8> {
    if b < 2 {
        return Err(Error::Domain(format!("b must be >= 2, got {b}")));
    }
    let m = Measure::beta(cfg.alpha)?;
    let rows = (2..=b)
        .map(|k| {
            Ok(vec![
                k.to_string(),
                lambda_bk(&m, b, k)?.to_string(),
                singleton_merge_rate(&m, b, k)?.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let head = ["k", "lambda_bk", "lambda_1bk"].map(String::from);
    let table = export::table_csv(&head, rows)?;
    let totals = export::table_csv(
        &["b", "g_b", "g_1b"].map(String::from),
        [vec![
            b.to_string(),
            total_rate(&m, b)?.to_string(),
            singleton_total_rate(&m, b)?.to_string(),
        ]],
    )?;
    stdout_bytes(&table)?;
    stdout_bytes(b"\n")?;
    stdout_bytes(&totals)?;
    finish(cfg, "rates", &[artifact("rates", table), artifact("rate_totals", totals)], None)?;
    Ok(0)
}

/// The time argument of the time-indexed laws: the first probe time, 1 if
/// none was given.
fn law_time(cfg: &ExperimentConfig) -> f64 {
    cfg.probe_times.first().copied().unwrap_or(1.0)
}

pub fn law(cfg: &ExperimentConfig, which: Which) -> Result<u8> {
    let t = law_time(cfg);
    let (kind, name) = match which {
        Which::Q => (LawKind::MergerQ, "law_q"),
        Which::T => (LawKind::ExternalLengthT, "law_t"),
        Which::Beta => (LawKind::BetaT(t), "law_beta"),
        Which::Y => (LawKind::MinimalCladeY, "law_y"),
        Which::Gumbel => (LawKind::GumbelW(t), "law_gumbel"),
        Which::Wtilde => (LawKind::WTilde, "law_wtilde"),
        Which::Blocks => (LawKind::BlockCountLimit(t), "law_blocks"),
    };
    let settings = LimitSettings {
        kmax: cfg.kmax,
        rel_tol: cfg.tolerance,
    };
    let handle = LawHandle::new(kind, cfg.alpha, settings)?;
    let rows = handle.table(cfg.kmax)?;
    let table = export::law_table_csv(&rows, handle.is_discrete())?;
    stdout_bytes(&table)?;
    let mut artifacts = vec![artifact(name, table)];
    if which == Which::Blocks {
        let lim = block_count_limits(cfg.alpha, t)?;
        artifacts.push(artifact(
            "block_count_limits",
            export::table_csv(
                &["t", "mean_ratio", "var_ratio", "unrestricted_count"].map(String::from),
                [vec![
                    t.to_string(),
                    lim.mean_ratio.to_string(),
                    lim.var_ratio.to_string(),
                    lim.unrestricted_count.to_string(),
                ]],
            )?,
        ));
    }
    finish(cfg, "law", &artifacts, None)?;
    Ok(0)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<u8> {
    let n = cfg.n.unwrap_or(SIM_N);
    let reps = cfg.reps.unwrap_or(SIM_REPS);
    let measure = Measure::beta(cfg.alpha)?;
    let sim = Simulator::with_max_n(&measure, n, cfg.max_n)?;
    let probes = cfg.scaled_probes(n);
    let req = Request::new(cfg.tracked, probes.clone());
    let first = Request {
        record_trajectory: true,
        ..req.clone()
    };
    let label = format!("simulate/beta{:?}/n={n}/k={}/p={probes:?}", cfg.alpha, cfg.tracked);
    let out = run_replicates(cfg.seed, &label, reps, cfg.workers, |i, rng| {
        sim.simulate(if i == 0 { &first } else { &req }, rng)
    })?;
    let trajectory = out.first().and_then(|r| r.trajectory.as_ref());
    let samples: Vec<_> = out.iter().map(|r| r.sample.clone()).collect();
    let table = export::functional_samples_csv(&samples)?;
    let mut artifacts = vec![artifact("samples", table)];
    if let Some(tr) = trajectory {
        artifacts.push(artifact("trajectory", export::trajectories_csv([(0, tr)])?));
    }
    if cfg.out.is_none() {
        stdout_bytes(&artifacts[0].data)?;
    } else {
        println!("{reps} replicates at n={n}");
    }
    finish(cfg, "simulate", &artifacts, None)?;
    Ok(0)
}

pub fn surrogate(cfg: &ExperimentConfig) -> Result<u8> {
    let n = cfg.n.unwrap_or(SIM_N);
    let reps = cfg.reps.unwrap_or(1);
    if reps == 0 {
        return Err(Error::Config("surrogate needs --reps >= 1".into()));
    }
    if cfg.probe_times.len() > 1 {
        return Err(Error::Config("surrogate takes a single --probe-time".into()));
    }
    // default: the K-probe time n^{1-α}
    let s = match cfg.probe_times.first() {
        Some(&t) => cfg.scaling.apply(cfg.alpha, n, t),
        None => Scaling::KProbe.apply(cfg.alpha, n, 1.0),
    };
    if n > cfg.max_n {
        return Err(Error::Resource { n, max: cfg.max_n });
    }
    let dist = SlackDistribution::build(cfg.alpha, GridSpec::default())?;
    let label = format!("surrogate/beta{:?}/n={n}/s={s:?}", cfg.alpha);
    let draws = run_replicates(cfg.seed, &label, reps, cfg.workers, |_, rng| {
        let d = small_time_frequencies(s, &dist, rng)?;
        let p = paintbox(&d.freqs, n, 1, rng)?;
        Ok((d, p.block_count(), p.largest()))
    })?;
    let freqs = export::frequencies_csv(&draws[0].0.freqs)?;
    let summary = export::table_csv(
        &["replicate", "atoms", "gamma", "largest_frequency", "blocks", "largest_block"].map(String::from),
        draws.iter().enumerate().map(|(i, (d, k, w))| {
            vec![
                i.to_string(),
                d.freqs.len().to_string(),
                d.gamma.to_string(),
                d.freqs.freqs()[0].to_string(),
                k.to_string(),
                w.to_string(),
            ]
        }),
    )?;
    if cfg.out.is_none() {
        stdout_bytes(&freqs)?;
    } else {
        println!("{reps} surrogate draws at s={s}, n={n}");
    }
    finish(
        cfg,
        "surrogate",
        &[artifact("frequencies", freqs), artifact("surrogate_summary", summary)],
        None,
    )?;
    Ok(0)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<u8> {
    let e = run_experiment(cfg)?;
    stdout_bytes(export::report_text(&e.reports).as_bytes())?;
    finish(cfg, "validate", &e.artifacts, Some(&e.reports))?;
    Ok(if e.has_errors() {
        EXIT_NUMERIC
    } else if !e.passed() {
        EXIT_COMPARISON
    } else {
        0
    })
}

pub fn slack_table(cfg: &ExperimentConfig) -> Result<u8> {
    let dist = SlackDistribution::build(cfg.alpha, GridSpec::default())?;
    let table = export::slack_table_csv(&dist.table())?;
    stdout_bytes(&table)?;
    finish(cfg, "slack-table", &[artifact("slack_table", table)], None)?;
    Ok(0)
}
