//! Per-trial records, aggregation, and the two CSV files.
//!
//! Both files are long-format so one schema serves every experiment:
//!
//! `trials.csv`:  `trial,seed,hub_degree,method,k,t,metric,value`
//!
//! `summary.csv`: `hub_degree,method,k,t,metric,mean,stderr,trials`
//!
//! `k` is empty for methods that do not depend on it (the cumulative
//! baseline, the random and no-removal arms). Numbers use Rust's shortest
//! round-trip formatting, so re-aggregating a parsed `trials.csv` reproduces
//! `summary.csv` exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const TRIALS_HEADER: &str = "trial,seed,hub_degree,method,k,t,metric,value";
pub const SUMMARY_HEADER: &str = "hub_degree,method,k,t,metric,mean,stderr,trials";

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub hub_degree: usize,
    pub method: String,
    pub k: Option<usize>,
    pub t: f64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub hub_degree: usize,
    pub method: String,
    pub k: Option<usize>,
    pub t: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

type Key = (usize, String, Option<usize>, u64, String);

fn key_of(r: &TrialRecord) -> Key {
    (r.hub_degree, r.method.clone(), r.k, r.t.to_bits(), r.metric.clone())
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; zero for a single value). Sums run in the given order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

/// Groups records by `(hub_degree, method, k, t, metric)`, in order of first
/// appearance, and summarises each group over trials in record order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<f64>> = HashMap::new();
    for r in records {
        let key = key_of(r);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.value);
    }
    order
        .into_iter()
        .map(|key| {
            let values = &groups[&key];
            let (mean, stderr) = mean_stderr(values);
            let (hub_degree, method, k, t, metric) = key;
            SummaryRow {
                hub_degree,
                method,
                k,
                t: f64::from_bits(t),
                metric,
                mean,
                stderr,
                trials: values.len(),
            }
        })
        .collect()
}

fn fmt_k(k: Option<usize>) -> String {
    k.map(|k| k.to_string()).unwrap_or_default()
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.hub_degree,
            r.method,
            fmt_k(r.k),
            r.t,
            r.metric,
            r.value
        )
        .unwrap();
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.hub_degree,
            r.method,
            fmt_k(r.k),
            r.t,
            r.metric,
            r.mean,
            r.stderr,
            r.trials
        )
        .unwrap();
    }
    out
}

fn split_row<'a>(line: &'a str, width: usize, origin: &str, lineno: usize) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != width {
        return Err(Error::format(
            origin,
            lineno,
            format!("expected {width} columns, found {}", cols.len()),
        ));
    }
    Ok(cols)
}

fn field<T: std::str::FromStr>(s: &str, name: &str, origin: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(origin, lineno, format!("bad {name} {s:?}")))
}

fn opt_k(s: &str, origin: &str, lineno: usize) -> Result<Option<usize>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, "k", origin, lineno).map(Some)
    }
}

pub fn parse_trials_csv(text: &str, origin: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRIALS_HEADER => {}
        _ => return Err(Error::format(origin, 1, format!("expected header {TRIALS_HEADER:?}"))),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let n = i + 1;
            let c = split_row(line, 8, origin, n)?;
            Ok(TrialRecord {
                trial: field(c[0], "trial", origin, n)?,
                seed: field(c[1], "seed", origin, n)?,
                hub_degree: field(c[2], "hub_degree", origin, n)?,
                method: c[3].to_string(),
                k: opt_k(c[4], origin, n)?,
                t: field(c[5], "t", origin, n)?,
                metric: c[6].to_string(),
                value: field(c[7], "value", origin, n)?,
            })
        })
        .collect()
}

pub fn parse_summary_csv(text: &str, origin: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SUMMARY_HEADER => {}
        _ => return Err(Error::format(origin, 1, format!("expected header {SUMMARY_HEADER:?}"))),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let n = i + 1;
            let c = split_row(line, 8, origin, n)?;
            Ok(SummaryRow {
                hub_degree: field(c[0], "hub_degree", origin, n)?,
                method: c[1].to_string(),
                k: opt_k(c[2], origin, n)?,
                t: field(c[3], "t", origin, n)?,
                metric: c[4].to_string(),
                mean: field(c[5], "mean", origin, n)?,
                stderr: field(c[6], "stderr", origin, n)?,
                trials: field(c[7], "trials", origin, n)?,
            })
        })
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
