//! Per-run records, summaries and their on-disk forms.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const RUNS_SCHEMA: &str = "# eqsentinel-runs v1";
pub const SUMMARY_SCHEMA: &str = "# eqsentinel-summary v1";
const RUNS_HEADER: &str = "group,run,seed,stream,tau_fwer,tau_fdr,rejected,final_value,metric";

/// Outcome of one independent run.
///
/// `group` names the parameter cell as `key=value` pairs joined by `;`.
/// `final_value` is the monitor's running maximum when the run ended and
/// `metric` carries an experiment-specific number (see each experiment).
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub group: String,
    pub run: usize,
    pub seed: u64,
    pub stream: u64,
    pub tau_fwer: Option<u64>,
    pub tau_fdr: Option<u64>,
    pub rejected: Vec<String>,
    pub final_value: f64,
    pub metric: f64,
}

impl RunRecord {
    pub fn new(group: impl Into<String>, run: usize, seed: u64, stream: u64) -> Self {
        Self {
            group: group.into(),
            run,
            seed,
            stream,
            tau_fwer: None,
            tau_fdr: None,
            rejected: Vec::new(),
            final_value: f64::NAN,
            metric: f64::NAN,
        }
    }

    /// Value of `key` in the group label.
    pub fn param(&self, key: &str) -> Option<f64> {
        group_param(&self.group, key)
    }
}

pub fn group_label(pairs: &[(&str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn group_param(group: &str, key: &str) -> Option<f64> {
    group
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.parse().ok())
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(t: Option<u64>) -> String {
    t.map(|t| t.to_string()).unwrap_or_default()
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{RUNS_SCHEMA}\n{RUNS_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.group,
            r.run,
            r.seed,
            r.stream,
            fmt_opt(r.tau_fwer),
            fmt_opt(r.tau_fdr),
            r.rejected.join(" "),
            fmt_f64(r.final_value),
            fmt_f64(r.metric)
        );
    }
    out
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RUNS_SCHEMA) {
        return Err(Error::Parse("missing runs schema line".into()));
    }
    if lines.next() != Some(RUNS_HEADER) {
        return Err(Error::Parse("unexpected runs header".into()));
    }
    let bad = |n: usize, what: &str| Error::Parse(format!("runs row {n}: bad {what}"));
    let mut records = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(n, "field count"));
        }
        let tau = |s: &str, what| -> Result<Option<u64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(n, what))
            }
        };
        records.push(RunRecord {
            group: f[0].to_string(),
            run: f[1].parse().map_err(|_| bad(n, "run"))?,
            seed: f[2].parse().map_err(|_| bad(n, "seed"))?,
            stream: f[3].parse().map_err(|_| bad(n, "stream"))?,
            tau_fwer: tau(f[4], "tau_fwer")?,
            tau_fdr: tau(f[5], "tau_fdr")?,
            rejected: f[6].split_whitespace().map(str::to_string).collect(),
            final_value: f[7].parse().map_err(|_| bad(n, "final_value"))?,
            metric: f[8].parse().map_err(|_| bad(n, "metric"))?,
        });
    }
    Ok(records)
}

/// A named acceptance statistic compared against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub statistic: String,
    pub value: f64,
}

/// Whitespace-delimited plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Figure {
    pub fn to_dat(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub checks: Vec<Check>,
    pub figures: Vec<Figure>,
}

impl Summary {
    pub fn stat(&mut self, group: impl Into<String>, statistic: impl Into<String>, value: f64) {
        self.rows.push(SummaryRow {
            group: group.into(),
            statistic: statistic.into(),
            value,
        });
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn get(&self, group: &str, statistic: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.statistic == statistic)
            .map(|r| r.value)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{SUMMARY_SCHEMA}\ngroup,statistic,value,status\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},", r.group, r.statistic, fmt_f64(r.value));
        }
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            let _ = writeln!(out, "check,{},{},{status}", c.name, u8::from(c.passed));
        }
        out
    }
}
