//! CSV and JSON writers shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use wmh_core::stats::{
    friedman_test, pairwise_tests, Correction, PairwiseResult, PairwiseTest, Summary,
};
use wmh_core::{CaseMetrics, FriedmanResult, MetricTable};

use crate::args::{CorrectionArg, PairwiseArg, StatsOptions};
use crate::SCHEMA_VERSION;

pub fn format_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the object `value` as pretty JSON with a top-level `schema_version`.
pub fn write_json(path: &Path, value: Value) -> Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    if let Value::Object(m) = value {
        obj.extend(m);
    }
    let text = serde_json::to_string_pretty(&Value::Object(obj))?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

/// One row of the per-case metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PerCaseRow {
    pub case_id: String,
    pub model: String,
    pub metrics: CaseMetrics,
}

pub const PER_CASE_HEADER: [&str; 7] = [
    "case_id",
    "model",
    "dsc",
    "hd95_mm",
    "avd_pct",
    "lesion_recall",
    "lesion_f1",
];

pub fn write_per_case(path: &Path, rows: &[PerCaseRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(PER_CASE_HEADER)?;
    for r in rows {
        let mut rec = vec![r.case_id.clone(), r.model.clone()];
        rec.extend(r.metrics.values().iter().map(|v| format_opt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_per_case(path: &Path) -> Result<Vec<PerCaseRow>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let parse = |s: &str| -> Result<Option<f64>> {
        let s = s.trim();
        if s.is_empty() {
            Ok(None)
        } else {
            Ok(Some(
                s.parse().with_context(|| format!("bad number {s:?}"))?,
            ))
        }
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        rows.push(PerCaseRow {
            case_id: field(0).to_string(),
            model: field(1).to_string(),
            metrics: CaseMetrics {
                dsc: parse(field(2))?.unwrap_or(f64::NAN),
                hd95_mm: parse(field(3))?,
                avd_pct: parse(field(4))?,
                lesion_recall: parse(field(5))?,
                lesion_f1: parse(field(6))?.unwrap_or(f64::NAN),
            },
        });
    }
    Ok(rows)
}

/// Models and cases in first-appearance order.
fn axes(rows: &[PerCaseRow]) -> (Vec<String>, Vec<String>) {
    let mut models: Vec<String> = Vec::new();
    let mut cases: Vec<String> = Vec::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
        if !cases.contains(&r.case_id) {
            cases.push(r.case_id.clone());
        }
    }
    (models, cases)
}

/// Cases × models table of the metric at position `m`.
pub fn metric_table(rows: &[PerCaseRow], m: usize) -> MetricTable {
    let (models, cases) = axes(rows);
    let mut values = vec![vec![None; models.len()]; cases.len()];
    for r in rows {
        let c = cases.iter().position(|x| *x == r.case_id).unwrap();
        let k = models.iter().position(|x| *x == r.model).unwrap();
        values[c][k] = r.metrics.values()[m].filter(|v| !v.is_nan());
    }
    MetricTable {
        models,
        cases,
        values,
    }
}

const UNITS: [&str; 5] = ["", "mm", "%", "", ""];

#[derive(Debug, Serialize)]
struct MetricSummary {
    #[serde(flatten)]
    summary: Summary,
    iqr: f64,
    median_iqr: String,
}

/// Per-model descriptive statistics of every metric.
pub fn summaries(rows: &[PerCaseRow]) -> Value {
    let (models, _) = axes(rows);
    let mut out = serde_json::Map::new();
    for model in &models {
        let mut per_metric = serde_json::Map::new();
        for (m, name) in wmh_core::metrics::METRIC_NAMES.iter().enumerate() {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| &r.model == model)
                .filter_map(|r| r.metrics.values()[m])
                .collect();
            let entry = match Summary::of(&values) {
                Some(s) => serde_json::to_value(MetricSummary {
                    iqr: s.q3 - s.q1,
                    median_iqr: s.median_iqr(UNITS[m]).replace("  ", " "),
                    summary: s,
                })
                .unwrap(),
                None => json!({ "n": 0 }),
            };
            per_metric.insert(name.to_string(), entry);
        }
        out.insert(model.clone(), Value::Object(per_metric));
    }
    Value::Object(out)
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::Bonferroni => Correction::Bonferroni,
            CorrectionArg::None => Correction::None,
        }
    }
}

impl From<PairwiseArg> for PairwiseTest {
    fn from(p: PairwiseArg) -> Self {
        match p {
            PairwiseArg::Wilcoxon => PairwiseTest::Wilcoxon,
            PairwiseArg::Sign => PairwiseTest::Sign,
        }
    }
}

#[derive(Debug, Serialize)]
struct MetricStats {
    higher_is_better: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    friedman: Option<FriedmanResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    friedman_error: Option<String>,
    pairwise: Vec<PairwiseResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairwise_error: Option<String>,
}

/// Friedman and pairwise tests of every metric across the models in `rows`.
pub fn model_statistics(rows: &[PerCaseRow], opts: &StatsOptions) -> Result<Value> {
    let correction: Correction = opts.correction.into();
    let test: PairwiseTest = opts.pairwise.into();
    let mut metrics = serde_json::Map::new();
    for (m, name) in wmh_core::metrics::METRIC_NAMES.iter().enumerate() {
        let table = metric_table(rows, m);
        let hib = CaseMetrics::higher_is_better(name);
        let (friedman, friedman_error) = match friedman_test(&table, hib) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let (pairwise, pairwise_error) = match pairwise_tests(&table, correction, test) {
            Ok(p) => (p, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let entry = MetricStats {
            higher_is_better: hib,
            friedman,
            friedman_error,
            pairwise,
            pairwise_error,
        };
        metrics.insert(name.to_string(), serde_json::to_value(entry)?);
    }
    let (models, cases) = axes(rows);
    Ok(json!({
        "alpha": wmh_core::stats::ALPHA,
        "correction": correction,
        "pairwise_test": test,
        "models": models,
        "n_cases": cases.len(),
        "metrics": metrics,
    }))
}
