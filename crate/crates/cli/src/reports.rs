//! Report payloads produced by the CLI and their text/CSV rendering.

use std::fmt::Write as _;

use lsem_core::analysis::{LayerwiseTable, RescoringMatrix};
use lsem_core::concentration::ConcentrationReport;
use lsem_core::AccuracyReport;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::provenance::Envelope;

pub const KIND_CONCENTRATION: &str = "concentration";
pub const KIND_TRAINING: &str = "training";
pub const KIND_EVALUATION: &str = "evaluation";
pub const KIND_RESCORING: &str = "rescoring";
pub const KIND_CORRELATION: &str = "correlation";
pub const KIND_LAYERWISE: &str = "layerwise";
pub const KIND_IDENTITY: &str = "identity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub attribute: String,
    pub accuracy: AccuracyReport,
    pub lambda: f64,
    pub flipped: bool,
    pub n_positives: usize,
    pub n_negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub attribute: String,
    pub accuracy: AccuracyReport,
    #[serde(default)]
    pub cosine_to_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// `scores` or `boundaries`.
    pub source: String,
    pub attributes: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub attribute: String,
    pub alphas: Vec<f64>,
    pub discrepancy: Vec<f64>,
    pub n_codes: usize,
    pub extractor_seed: u64,
    pub nondecreasing: bool,
}

/// A parsed report, validated against the schema of its kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Concentration(ConcentrationReport),
    Training(TrainingReport),
    Evaluation(EvaluationReport),
    Rescoring(RescoringMatrix),
    Correlation(CorrelationReport),
    Layerwise(LayerwiseTable),
    Identity(IdentityReport),
}

/// One value of a report in long format.
pub struct Cell {
    pub row: String,
    pub column: String,
    pub value: f64,
}

pub fn parse(path: &str, text: &str) -> CliResult<Parsed> {
    let bad = |message: String| CliError::Input { path: path.to_string(), message };
    let env: Envelope =
        serde_json::from_str(text).map_err(|e| bad(format!("not a report envelope: {e}")))?;
    let v = env.report;
    let r = match env.kind.as_str() {
        KIND_CONCENTRATION => serde_json::from_value(v).map(Parsed::Concentration),
        KIND_TRAINING => serde_json::from_value(v).map(Parsed::Training),
        KIND_EVALUATION => serde_json::from_value(v).map(Parsed::Evaluation),
        KIND_RESCORING => serde_json::from_value(v).map(Parsed::Rescoring),
        KIND_CORRELATION => serde_json::from_value(v).map(Parsed::Correlation),
        KIND_LAYERWISE => serde_json::from_value(v).map(Parsed::Layerwise),
        KIND_IDENTITY => serde_json::from_value(v).map(Parsed::Identity),
        other => return Err(bad(format!("unknown report kind '{other}'"))),
    };
    r.map_err(|e| bad(format!("{} report does not match its schema: {e}", env.kind)))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn table(out: &mut String, corner: &str, columns: &[String], rows: &[String], values: &[Vec<f64>]) {
    let w = columns.iter().chain(rows).map(String::len).max().unwrap_or(0).max(corner.len()).max(10);
    let _ = write!(out, "{corner:<w$}");
    for c in columns {
        let _ = write!(out, " {c:>w$}");
    }
    out.push('\n');
    for (r, row) in rows.iter().zip(values) {
        let _ = write!(out, "{r:<w$}");
        for v in row {
            let _ = write!(out, " {v:>w$.4}");
        }
        out.push('\n');
    }
}

impl Parsed {
    pub fn render(&self) -> String {
        let mut out = String::new();
        match self {
            Parsed::Concentration(r) => {
                let _ = writeln!(
                    out,
                    "{} {:?} d={} n={} param={} empirical={:.6} analytic={} bound={} tol={:.6}{}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.statistic,
                    r.d,
                    r.n_samples,
                    r.parameter,
                    r.empirical,
                    opt(r.analytic),
                    opt(r.bound_rhs),
                    r.tolerance,
                    if r.heuristic { " (heuristic)" } else { "" },
                );
            }
            Parsed::Training(r) => {
                let _ = writeln!(
                    out,
                    "training {}: val_accuracy={:.4} full_accuracy={} lambda={:.6} n_train={} n_val={}",
                    r.attribute,
                    r.accuracy.val_accuracy,
                    opt(r.accuracy.full_accuracy),
                    r.lambda,
                    r.accuracy.n_train,
                    r.accuracy.n_val,
                );
            }
            Parsed::Evaluation(r) => {
                let _ = writeln!(
                    out,
                    "evaluation {}: val_accuracy={:.4} full_accuracy={} cosine_to_truth={}",
                    r.attribute,
                    r.accuracy.val_accuracy,
                    opt(r.accuracy.full_accuracy),
                    opt(r.cosine_to_truth),
                );
            }
            Parsed::Rescoring(r) => {
                let _ = writeln!(out, "rescoring alpha={} codes={} (rows: edited, columns: measured)", r.alpha, r.n_codes);
                table(&mut out, "edited", &r.measured, &r.manipulated, &r.values);
            }
            Parsed::Correlation(r) => {
                let _ = writeln!(out, "correlation of {}", r.source);
                table(&mut out, "", &r.attributes, &r.attributes, &r.values);
            }
            Parsed::Layerwise(r) => {
                let _ = writeln!(out, "layerwise alpha={} codes={}", r.alpha, r.n_codes);
                table(&mut out, "attribute", &r.columns, &r.attributes, &r.values);
            }
            Parsed::Identity(r) => {
                let _ = write!(out, "identity {} codes={}:", r.attribute, r.n_codes);
                for (a, d) in r.alphas.iter().zip(&r.discrepancy) {
                    let _ = write!(out, " alpha={a}:{d:.6}");
                }
                let _ = writeln!(out, "{}", if r.nondecreasing { "" } else { " (not monotone)" });
            }
        }
        out
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Parsed::Concentration(_) => KIND_CONCENTRATION,
            Parsed::Training(_) => KIND_TRAINING,
            Parsed::Evaluation(_) => KIND_EVALUATION,
            Parsed::Rescoring(_) => KIND_RESCORING,
            Parsed::Correlation(_) => KIND_CORRELATION,
            Parsed::Layerwise(_) => KIND_LAYERWISE,
            Parsed::Identity(_) => KIND_IDENTITY,
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let cell = |row: &str, column: &str, value: f64| Cell { row: row.into(), column: column.into(), value };
        let grid = |rows: &[String], cols: &[String], values: &[Vec<f64>]| {
            rows.iter()
                .zip(values)
                .flat_map(|(r, vs)| cols.iter().zip(vs).map(move |(c, &v)| cell(r, c, v)))
                .collect::<Vec<_>>()
        };
        match self {
            Parsed::Concentration(r) => {
                let name = format!("{:?}", r.statistic);
                let mut cells = vec![cell(&name, "empirical", r.empirical), cell(&name, "tolerance", r.tolerance)];
                cells.extend(r.analytic.map(|v| cell(&name, "analytic", v)));
                cells.extend(r.bound_rhs.map(|v| cell(&name, "bound", v)));
                cells.push(cell(&name, "passed", f64::from(u8::from(r.passed))));
                cells
            }
            Parsed::Training(r) => {
                let mut cells = vec![
                    cell(&r.attribute, "val_accuracy", r.accuracy.val_accuracy),
                    cell(&r.attribute, "lambda", r.lambda),
                ];
                cells.extend(r.accuracy.full_accuracy.map(|v| cell(&r.attribute, "full_accuracy", v)));
                cells
            }
            Parsed::Evaluation(r) => {
                let mut cells = vec![cell(&r.attribute, "val_accuracy", r.accuracy.val_accuracy)];
                cells.extend(r.accuracy.full_accuracy.map(|v| cell(&r.attribute, "full_accuracy", v)));
                cells.extend(r.cosine_to_truth.map(|v| cell(&r.attribute, "cosine_to_truth", v)));
                cells
            }
            Parsed::Rescoring(r) => grid(&r.manipulated, &r.measured, &r.values),
            Parsed::Correlation(r) => grid(&r.attributes, &r.attributes, &r.values),
            Parsed::Layerwise(r) => grid(&r.attributes, &r.columns, &r.values),
            Parsed::Identity(r) => r
                .alphas
                .iter()
                .zip(&r.discrepancy)
                .map(|(a, &d)| cell(&r.attribute, &format!("alpha={a}"), d))
                .collect(),
        }
    }
}
