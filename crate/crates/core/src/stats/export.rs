//! CSV and JSON renderings of samples, laws and reports.
//!
//! Every table has a single header row. Floats use the shortest
//! representation that round-trips, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::ComparisonReport;
use crate::engine::{CoalescentTrajectory, FunctionalSample};
use crate::error::{Error, Result};
use crate::frequencies::FrequencyVector;
use crate::limits::LawRow;

/// A named table destined for `<run>/<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub data: Vec<u8>,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Renders a header and rows of already formatted cells.
pub fn table_csv<I>(header: &[String], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Columns `replicate, T_1..T_k, Q, Y, W_tilde, K@probe_i..., W@probe_i...`.
pub fn functional_samples_csv(samples: &[FunctionalSample]) -> Result<Vec<u8>> {
    let k = samples.first().map_or(0, |s| s.t_ext.len());
    let p = samples.first().map_or(0, |s| s.k_probe.len());
    let mut head = vec!["replicate".to_string()];
    head.extend((1..=k).map(|i| format!("T_{i}")));
    head.extend(header(&["Q", "Y", "W_tilde"]));
    head.extend((1..=p).map(|i| format!("K@probe_{i}")));
    head.extend((1..=p).map(|i| format!("W@probe_{i}")));
    table_csv(
        &head,
        samples.iter().enumerate().map(|(r, s)| {
            let mut row = vec![r.to_string()];
            row.extend(s.t_ext.iter().map(|t| t.to_string()));
            row.extend([s.q.to_string(), s.y.to_string(), s.w_tilde.to_string()]);
            row.extend(s.k_probe.iter().map(|v| v.to_string()));
            row.extend(s.w_probe.iter().map(|v| v.to_string()));
            row
        }),
    )
}

/// One event per row: `replicate, t, b_before, k_merged, involved_one`.
pub fn trajectories_csv<'a, I>(trajectories: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = (usize, &'a CoalescentTrajectory)>,
{
    let rows = trajectories.into_iter().flat_map(|(r, tr)| {
        tr.events.iter().map(move |e| {
            vec![
                r.to_string(),
                e.t.to_string(),
                e.b_before.to_string(),
                e.k.to_string(),
                ((e.merged_contains & 1) as u8).to_string(),
            ]
        })
    });
    table_csv(&header(&["replicate", "t", "b_before", "k_merged", "involved_one"]), rows)
}

/// `arg, pmf|pdf, cdf`.
pub fn law_table_csv(rows: &[LawRow], discrete: bool) -> Result<Vec<u8>> {
    let dens = if discrete { "pmf" } else { "pdf" };
    table_csv(
        &header(&["arg", dens, "cdf"]),
        rows.iter()
            .map(|r| vec![r.arg.to_string(), r.density.to_string(), r.cdf.to_string()]),
    )
}

/// `rank, frequency`.
pub fn frequencies_csv(freqs: &FrequencyVector) -> Result<Vec<u8>> {
    table_csv(
        &header(&["rank", "frequency"]),
        freqs.rows().map(|(r, f)| vec![r.to_string(), f.to_string()]),
    )
}

/// `x, F, pdf`.
pub fn slack_table_csv(rows: &[(f64, f64, f64)]) -> Result<Vec<u8>> {
    table_csv(
        &header(&["x", "F", "pdf"]),
        rows.iter()
            .map(|(x, f, p)| vec![x.to_string(), f.to_string(), p.to_string()]),
    )
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"))
}

/// Fixed-width table for terminals and `report.txt`.
pub fn report_text(reports: &[ComparisonReport]) -> String {
    let mut out = format!(
        "{:>2}  {:<26} {:<10} {:>13} {:>13}  {:<6} notes\n",
        "#", "comparison", "kind", "value", "threshold", "result"
    );
    for r in reports {
        let verdict = match (r.pass, r.is_error(), r.diagnostic) {
            (_, true, _) => "ERROR",
            (true, _, false) => "pass",
            (false, _, false) => "FAIL",
            (true, _, true) => "ok*",
            (false, _, true) => "off*",
        };
        let kind = serde_json::to_value(r.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let notes = r.error.as_deref().unwrap_or(&r.notes);
        out.push_str(&format!(
            "{:>2}  {:<26} {:<10} {:>13} {:>13}  {:<6} {}\n",
            r.criterion,
            r.id,
            kind,
            fmt_value(r.value),
            format!("{:.3e}", r.threshold),
            verdict,
            notes
        ));
    }
    out
}

/// Machine-readable rows with the same fields as the JSON report.
pub fn report_csv(reports: &[ComparisonReport]) -> Result<Vec<u8>> {
    table_csv(
        &header(&[
            "criterion",
            "id",
            "kind",
            "value",
            "threshold",
            "pass",
            "sample_size",
            "law",
            "diagnostic",
            "notes",
            "error",
        ]),
        reports.iter().map(|r| {
            vec![
                r.criterion.to_string(),
                r.id.clone(),
                serde_json::to_value(r.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                r.value.map(|v| v.to_string()).unwrap_or_default(),
                r.threshold.to_string(),
                r.pass.to_string(),
                r.sample_size.to_string(),
                r.law.clone(),
                r.diagnostic.to_string(),
                r.notes.clone(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

#[derive(Serialize)]
struct ReportFile<'a> {
    pass: bool,
    failed: Vec<&'a str>,
    errors: Vec<&'a str>,
    reports: &'a [ComparisonReport],
}

/// `report.json`: overall verdict plus one record per comparison.
pub fn report_json(reports: &[ComparisonReport]) -> Result<String> {
    let counted = || reports.iter().filter(|r| !r.diagnostic);
    let file = ReportFile {
        pass: counted().all(|r| r.pass),
        failed: counted().filter(|r| !r.pass).map(|r| r.id.as_str()).collect(),
        errors: reports.iter().filter(|r| r.is_error()).map(|r| r.id.as_str()).collect(),
        reports,
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// What produced a run directory.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Writes each artifact as `<dir>/<name>.csv`, creating `dir` if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(format!("{}.csv", a.name)), &a.data)?;
    }
    Ok(())
}
