//! Report files and the cross-run summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use authorgraph_core::harness::ExperimentReport;
use authorgraph_core::probes::Metrics;
use serde::Serialize;
use serde_json::Value;

use crate::formats::{create_dir, write_json, write_text};
use crate::Error;

pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.txt";
pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Plain-text grid: rows are true authors, columns predicted authors.
pub fn confusion_text(classes: &[String], metrics: &Metrics) -> String {
    let label = classes.iter().map(String::len).max().unwrap_or(0).max(9);
    let cell = metrics.confusion.iter().flatten().map(|c| c.to_string().len()).chain(classes.iter().map(String::len)).max().unwrap_or(1);
    let mut out = String::new();
    let _ = write!(out, "{:>label$}", "true\\pred");
    for c in classes {
        let _ = write!(out, " {c:>cell$}");
    }
    out.push('\n');
    for (c, row) in classes.iter().zip(&metrics.confusion) {
        let _ = write!(out, "{c:>label$}");
        for v in row {
            let _ = write!(out, " {v:>cell$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "accuracy {:.6}", metrics.accuracy);
    out
}

/// Writes `report.json`, `confusion.txt` and `run_config.json` into `dir`.
pub fn write_experiment<C: Serialize>(dir: &Path, report: &ExperimentReport, run_config: &C) -> Result<(), Error> {
    create_dir(dir)?;
    write_json(&dir.join(REPORT_FILE), report)?;
    write_text(&dir.join(CONFUSION_FILE), &confusion_text(&report.classes, &report.metrics))?;
    write_json(&dir.join(RUN_CONFIG_FILE), run_config)
}

/// Directory name of one run inside an evaluate output directory.
pub fn run_dir_name(report: &ExperimentReport) -> String {
    format!("{}-w{}-{}", report.method.as_str(), report.window, report.fingerprint)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub window: u64,
    pub accuracy: f64,
    pub split_seed: u64,
    pub fingerprint: String,
}

fn method_rank(method: &str) -> usize {
    ["structural", "semantic", "graph2vec", "gat", "gat_augment"].iter().position(|m| *m == method).unwrap_or(usize::MAX)
}

fn field<'a>(value: &'a Value, path: &[&str], file: &Path) -> Result<&'a Value, Error> {
    let mut v = value;
    for key in path {
        v = v.get(key).ok_or_else(|| Error::Report { path: file.to_path_buf(), message: format!("missing field {}", path.join(".")) })?;
    }
    Ok(v)
}

fn parse_row(file: &Path) -> Result<SummaryRow, Error> {
    let text = fs::read_to_string(file).map_err(|source| Error::Io { path: file.to_path_buf(), source })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: file.to_path_buf(), line: e.line(), message: e.to_string() })?;
    let bad = |what: &str| Error::Report { path: file.to_path_buf(), message: format!("field {what} has the wrong type") };
    Ok(SummaryRow {
        method: field(&value, &["method"], file)?.as_str().ok_or_else(|| bad("method"))?.to_string(),
        window: field(&value, &["window"], file)?.as_u64().ok_or_else(|| bad("window"))?,
        accuracy: field(&value, &["metrics", "accuracy"], file)?.as_f64().ok_or_else(|| bad("metrics.accuracy"))?,
        split_seed: field(&value, &["split_seed"], file)?.as_u64().ok_or_else(|| bad("split_seed"))?,
        fingerprint: field(&value, &["fingerprint"], file)?.as_str().ok_or_else(|| bad("fingerprint"))?.to_string(),
    })
}

fn find_reports(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), Error> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    for entry in entries {
        let path = entry.map_err(|source| Error::Io { path: dir.to_path_buf(), source })?.path();
        if path.is_dir() {
            find_reports(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == REPORT_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// One message per dropped duplicate fingerprint.
    pub warnings: Vec<String>,
}

/// Gather every `report.json` under `dir`, drop duplicate fingerprints and
/// sort by method, window, split seed.
pub fn collect_summary(dir: &Path) -> Result<Summary, Error> {
    let mut files = Vec::new();
    find_reports(dir, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::NoReports(dir.to_path_buf()));
    }
    let mut by_fingerprint: BTreeMap<String, (PathBuf, SummaryRow)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for file in files {
        let row = parse_row(&file)?;
        if let Some((first, _)) = by_fingerprint.get(&row.fingerprint) {
            warnings.push(format!("duplicate fingerprint {} in {} (kept {})", row.fingerprint, file.display(), first.display()));
            continue;
        }
        by_fingerprint.insert(row.fingerprint.clone(), (file, row));
    }
    let mut rows: Vec<SummaryRow> = by_fingerprint.into_values().map(|(_, r)| r).collect();
    rows.sort_by(|a, b| {
        (method_rank(&a.method), &a.method, a.window, a.split_seed, &a.fingerprint)
            .cmp(&(method_rank(&b.method), &b.method, b.window, b.split_seed, &b.fingerprint))
    });
    Ok(Summary { rows, warnings })
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("method,window,accuracy,split_seed,fingerprint\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6},{},{}", r.method, r.window, r.accuracy, r.split_seed, r.fingerprint);
    }
    out
}
