//! JSON report fragments.
//!
//! Every report is an object with `schema_version` and `command`. Floats are
//! written in shortest round-trip form, so reading a threshold back yields
//! the identical `f64`.

use serde_json::{json, Map, Value};
use thresh_core::{FitResult, MetricReport, NormalizationMap, TraceRecord};

pub const SCHEMA_VERSION: u32 = 1;

pub fn header(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m
}

/// `{name: value}` in subtask order.
pub fn named(names: &[String], values: &[f64]) -> Value {
    Value::Object(
        names
            .iter()
            .zip(values)
            .map(|(n, &v)| (n.clone(), json!(v)))
            .collect(),
    )
}

pub fn metrics(m: &MetricReport) -> Value {
    json!({
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "tn": m.tn,
    })
}

fn normalization(names: &[String], maps: &[NormalizationMap]) -> Value {
    Value::Object(
        names
            .iter()
            .zip(maps)
            .map(|(n, m)| {
                (
                    n.clone(),
                    json!({"raw": m.raw_knots(), "normalized": m.normalized_knots()}),
                )
            })
            .collect(),
    )
}

fn trace(records: &[TraceRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|r| {
                json!({
                    "iteration": r.iteration,
                    "loss": r.loss,
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                    "tau_hat": r.tau_hat,
                    "shape": r.shape,
                })
            })
            .collect(),
    )
}

/// Result fields shared by `fit` reports and `compare` rows.
pub fn fit_fields(
    names: &[String],
    res: &FitResult,
    metrics_report: &MetricReport,
    wall_time_ms: f64,
    with_trace: bool,
) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("thresholds_raw".into(), named(names, &res.thresholds_raw));
    m.insert(
        "thresholds_normalized".into(),
        named(names, &res.thresholds_normalized),
    );
    if let Some(w) = &res.widths {
        m.insert("widths".into(), named(names, w));
    }
    if let Some(s) = &res.sigmas {
        m.insert("sigma".into(), named(names, s));
    }
    m.insert(
        "normalization".into(),
        res.normalization
            .as_ref()
            .map_or(Value::Null, |maps| normalization(names, maps)),
    );
    m.insert("metrics".into(), metrics(metrics_report));
    m.insert("feasible".into(), json!(res.feasible));
    m.insert("iterations_run".into(), json!(res.iterations_run));
    m.insert("wall_time_ms".into(), json!(wall_time_ms));
    if with_trace {
        m.insert("trace".into(), trace(&res.trace));
    }
    m
}
