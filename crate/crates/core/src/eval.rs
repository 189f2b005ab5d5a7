//! Scoring of realized transition logs against ground truth, and
//! aggregation of per-run results into report tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dronesim::{yaw_difference, StateTransition};
use crate::prompt::Preset;
use crate::skillscript::ErrorCategory;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("tolerances must be positive (pos_eps={pos_eps}, yaw_eps={yaw_eps})")]
    BadTolerance { pos_eps: f64, yaw_eps: f64 },
    #[error("unknown report format `{0}` (expected markdown, csv or json)")]
    UnknownFormat(String),
}

/// Per-component matching tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Meters, applied to each of dx, dy, dz.
    pub pos_eps: f64,
    /// Degrees, applied to the shortest-path yaw difference.
    pub yaw_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { pos_eps: 0.1, yaw_eps: 1.0 }
    }
}

impl Tolerance {
    pub fn new(pos_eps: f64, yaw_eps: f64) -> Result<Self, EvalError> {
        if pos_eps > 0.0 && yaw_eps > 0.0 && pos_eps.is_finite() && yaw_eps.is_finite() {
            Ok(Tolerance { pos_eps, yaw_eps })
        } else {
            Err(EvalError::BadTolerance { pos_eps, yaw_eps })
        }
    }
}

pub fn transitions_match(a: &StateTransition, b: &StateTransition, tol: &Tolerance) -> bool {
    let pos_ok =
        (a.dx - b.dx).abs() <= tol.pos_eps && (a.dy - b.dy).abs() <= tol.pos_eps && (a.dz - b.dz).abs() <= tol.pos_eps;
    pos_ok
        && match yaw_difference(a.dyaw, b.dyaw) {
            Ok(d) => d.abs() <= tol.yaw_eps,
            Err(_) => false,
        }
}

fn is_noop(t: &StateTransition, tol: &Tolerance) -> bool {
    t.dx.abs() < tol.pos_eps && t.dy.abs() < tol.pos_eps && t.dz.abs() < tol.pos_eps && t.dyaw.abs() < tol.yaw_eps
}

/// Drop transitions too small to count as a maneuver.
pub fn filter_noops(log: &[StateTransition], tol: &Tolerance) -> Vec<StateTransition> {
    log.iter().filter(|t| !is_noop(t, tol)).copied().collect()
}

/// Length of the longest common subsequence under an arbitrary pairwise
/// match predicate.
pub fn lcs_length<T>(a: &[T], b: &[T], matches: impl Fn(&T, &T) -> bool) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if matches(x, y) { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// How partial progress is credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletenessMode {
    /// Matched fraction via order-respecting longest common subsequence.
    #[default]
    Lcs,
    /// Only the leading run of per-index matches counts.
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub success: bool,
    pub completeness: f64,
}

/// Score an already no-op-filtered log against ground truth.
pub fn score_run(actual: &[StateTransition], gt: &[StateTransition], tol: &Tolerance) -> Result<Score, EvalError> {
    score_run_with(actual, gt, tol, CompletenessMode::Lcs)
}

pub fn score_run_with(
    actual: &[StateTransition],
    gt: &[StateTransition],
    tol: &Tolerance,
    mode: CompletenessMode,
) -> Result<Score, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let m = |a: &StateTransition, b: &StateTransition| transitions_match(a, b, tol);
    let success = actual.len() == gt.len() && actual.iter().zip(gt).all(|(a, b)| m(a, b));
    let matched = match mode {
        CompletenessMode::Lcs => lcs_length(actual, gt, m),
        CompletenessMode::Prefix => actual.iter().zip(gt).take_while(|(a, b)| m(a, b)).count(),
    };
    Ok(Score { success, completeness: matched as f64 / gt.len() as f64 })
}

/// Why a run did not produce a scorable program execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RunErrorCategory {
    NoCode,
    ParseError,
    UnknownFunction,
    RuntimeError,
    StepLimitExceeded,
    #[serde(rename = "LLMError")]
    LlmError,
}

impl From<ErrorCategory> for RunErrorCategory {
    fn from(c: ErrorCategory) -> Self {
        match c {
            ErrorCategory::ParseError => RunErrorCategory::ParseError,
            ErrorCategory::UnknownFunction => RunErrorCategory::UnknownFunction,
            ErrorCategory::RuntimeError => RunErrorCategory::RuntimeError,
            ErrorCategory::StepLimitExceeded => RunErrorCategory::StepLimitExceeded,
        }
    }
}

impl fmt::Display for RunErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunErrorCategory::NoCode => "NoCode",
            RunErrorCategory::ParseError => "ParseError",
            RunErrorCategory::UnknownFunction => "UnknownFunction",
            RunErrorCategory::RuntimeError => "RuntimeError",
            RunErrorCategory::StepLimitExceeded => "StepLimitExceeded",
            RunErrorCategory::LlmError => "LLMError",
        };
        f.write_str(s)
    }
}

/// Outcome of one (task, method, repeat) run. One JSON line in a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task_id: String,
    pub method: Preset,
    pub model: String,
    pub k: usize,
    pub cot: bool,
    pub constraint_impl: bool,
    pub repeat_index: u32,
    pub success: bool,
    pub completeness: f64,
    pub error_category: Option<RunErrorCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    pub actual_transitions: Vec<StateTransition>,
    pub response_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub method: Preset,
    pub model: String,
    pub k: usize,
    pub cot: bool,
    pub constraint_impl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    #[serde(flatten)]
    pub key: CellKey,
    pub runs: usize,
    pub successes: usize,
    /// Success rate in `[0, 1]`.
    pub sr: f64,
    /// Mean completeness in `[0, 1]`.
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cells: Vec<ReportCell>,
}

impl AggregateReport {
    pub fn total_runs(&self) -> usize {
        self.cells.iter().map(|c| c.runs).sum()
    }
}

pub fn aggregate(results: &[RunResult]) -> AggregateReport {
    // sum completeness in a canonical order so the mean is permutation-invariant
    let mut groups: BTreeMap<CellKey, Vec<(bool, f64)>> = BTreeMap::new();
    for r in results {
        let key = CellKey {
            method: r.method,
            model: r.model.clone(),
            k: r.k,
            cot: r.cot,
            constraint_impl: r.constraint_impl,
        };
        groups.entry(key).or_default().push((r.success, r.completeness));
    }
    let cells = groups
        .into_iter()
        .map(|(key, mut runs)| {
            runs.sort_by(|a, b| a.1.total_cmp(&b.1));
            let n = runs.len();
            let successes = runs.iter().filter(|r| r.0).count();
            let total: f64 = runs.iter().map(|r| r.1).sum();
            ReportCell { key, runs: n, successes, sr: successes as f64 / n as f64, completeness: total / n as f64 }
        })
        .collect();
    AggregateReport { cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

const COLUMNS: [&str; 8] = ["method", "model", "k", "cot", "constraint_impl", "runs", "SR", "completeness"];

/// Percentage rounded to one decimal place, the precision used in every
/// rendered format.
pub fn percent(fraction: f64) -> f64 {
    (fraction * 1000.0).round() / 10.0
}

fn row(cell: &ReportCell) -> [String; 8] {
    [
        cell.key.method.to_string(),
        cell.key.model.clone(),
        cell.key.k.to_string(),
        cell.key.cot.to_string(),
        cell.key.constraint_impl.to_string(),
        cell.runs.to_string(),
        format!("{:.1}%", percent(cell.sr)),
        format!("{:.1}%", percent(cell.completeness)),
    ]
}

#[derive(Serialize)]
struct JsonRow<'a> {
    method: Preset,
    model: &'a str,
    k: usize,
    cot: bool,
    constraint_impl: bool,
    runs: usize,
    successes: usize,
    sr_percent: f64,
    completeness_percent: f64,
}

pub fn render_report(report: &AggregateReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => {
            let mut out = format!("| {} |\n", COLUMNS.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(COLUMNS.len())));
            for cell in &report.cells {
                out.push_str(&format!("| {} |\n", row(cell).join(" | ")));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = COLUMNS.join(",");
            out.push('\n');
            for cell in &report.cells {
                let fields: Vec<String> = row(cell).iter().map(|f| csv_field(f)).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Json => {
            let rows: Vec<JsonRow> = report
                .cells
                .iter()
                .map(|c| JsonRow {
                    method: c.key.method,
                    model: &c.key.model,
                    k: c.key.k,
                    cot: c.key.cot,
                    constraint_impl: c.key.constraint_impl,
                    runs: c.runs,
                    successes: c.successes,
                    sr_percent: percent(c.sr),
                    completeness_percent: percent(c.completeness),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("report rows serialize");
            s.push('\n');
            s
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
