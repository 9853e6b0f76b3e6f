//! Subcommand implementations. Each returns the JSON report and the
//! process exit code.

use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Map, Value};
use thresh_core::{
    def_thresh, def_thresh_multilabel, evaluate_thresholds, evaluate_thresholds_multilabel, fit,
    fit_multilabel, greedy_thresh, greedy_thresh_multilabel, grid_oracle, grid_oracle_multilabel,
    parse_and_bind, sgl_thresh_fit, sgl_thresh_fit_multilabel, DecisionExpr, FitConfig, FitResult,
    GreedyConfig, MetricReport, Objective, SglConfig,
};

use crate::config::{Method, ObjectiveName, Preset, RunConfig};
use crate::error::{CliError, InputError};
use crate::load::{load_dataset, Loaded};
use crate::report;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const DEFAULT_GRID_SIZE: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalSource {
    /// `name=value` pairs.
    Thresholds(Vec<(String, f64)>),
    /// A previous `fit` or `oracle` report.
    Report(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Fit,
    Compare,
    Oracle,
    Eval(EvalSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Fit => run_fit(cfg),
        Command::Compare => run_compare(cfg),
        Command::Oracle => run_oracle(cfg),
        Command::Eval(source) => run_eval(cfg, source),
    }
}

/// Parses `a=0.5,b=0.25`.
pub fn parse_threshold_list(text: &str) -> Result<Vec<(String, f64)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("threshold `{pair}` is not name=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("threshold `{pair}` is not a number")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

struct Prepared {
    data: Loaded,
    expr: Option<DecisionExpr>,
}

impl Prepared {
    fn names(&self) -> &[String] {
        self.data.names()
    }

    fn expr_text(&self) -> Value {
        self.expr
            .as_ref()
            .map_or(Value::Null, |e| json!(e.to_text(self.names())))
    }

    fn evaluate(&self, thresholds: &[f64]) -> Result<MetricReport, CliError> {
        Ok(match (&self.data, &self.expr) {
            (Loaded::Single(ds), Some(e)) => evaluate_thresholds(ds, e, thresholds)?,
            (Loaded::Multi(ds), _) => evaluate_thresholds_multilabel(ds, thresholds)?,
            (Loaded::Single(_), None) => return Err(CliError::config("no decision expression")),
        })
    }
}

fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    Ok(load_dataset(cfg.input_path()?, cfg.input_format()?)?)
}

fn build_expr(
    cfg: &RunConfig,
    names: &[String],
    text: Option<String>,
) -> Result<Option<DecisionExpr>, CliError> {
    if let Some(p) = cfg.preset {
        return Ok(Some(match p {
            Preset::OrChain => DecisionExpr::or_chain(names.len()),
            Preset::NotAndChain => DecisionExpr::not_and_chain(names.len()),
        }));
    }
    match text {
        Some(t) => Ok(Some(parse_and_bind(t.trim(), names)?)),
        None => Ok(None),
    }
}

/// Loads the data and binds the expression, checking that the file's label
/// layout matches the objective.
fn prepare(cfg: &RunConfig, targets_allowed: bool) -> Result<Prepared, CliError> {
    cfg.check_objective(targets_allowed)?;
    let text = cfg.expression_text()?;
    let data = load(cfg)?;
    match (&data, cfg.objective()) {
        (Loaded::Multi(_), ObjectiveName::RecallAtPrecision) => {
            return Err(InputError::MissingLabelColumn {
                line: 1,
                expected: "label".into(),
            }
            .into())
        }
        (Loaded::Single(_), ObjectiveName::MicroF1) => {
            return Err(InputError::MissingLabelColumn {
                line: 1,
                expected: "label_<class>".into(),
            }
            .into())
        }
        _ => {}
    }
    let expr = build_expr(cfg, data.names(), text)?;
    Ok(Prepared { data, expr })
}

fn trusthresh_config(cfg: &RunConfig, target: f64) -> FitConfig {
    let base = match cfg.objective() {
        ObjectiveName::RecallAtPrecision => FitConfig::recall_at_precision(target, cfg.alpha()),
        ObjectiveName::MicroF1 => FitConfig::micro_f1(),
    };
    FitConfig {
        learning_rate: cfg.learning_rate.unwrap_or(base.learning_rate),
        iterations: cfg.iterations.unwrap_or(base.iterations),
        tau_init: cfg.tau_init.unwrap_or(base.tau_init),
        width_init: cfg.width_init.unwrap_or(base.width_init),
        normalize_scores: cfg.normalize_scores.unwrap_or(base.normalize_scores),
        learn_widths: cfg.learn_widths.unwrap_or(base.learn_widths),
        update_rule: cfg.update_rule.map_or(base.update_rule, Into::into),
        ..base
    }
}

fn sgl_config(cfg: &RunConfig) -> SglConfig {
    let base = match cfg.objective() {
        ObjectiveName::RecallAtPrecision => SglConfig::recall_at_precision(),
        ObjectiveName::MicroF1 => SglConfig::micro_f1(),
    };
    SglConfig {
        tau_init: cfg.tau_init.unwrap_or(base.tau_init),
        sigma_init: cfg.sigma_init.unwrap_or(base.sigma_init),
        learning_rate: cfg.learning_rate.unwrap_or(base.learning_rate),
        iterations: cfg.iterations.unwrap_or(base.iterations),
        normalize_scores: cfg.normalize_scores.unwrap_or(base.normalize_scores),
        learn_sigma: cfg.learn_widths.unwrap_or(base.learn_sigma),
        update_rule: cfg.update_rule.map_or(base.update_rule, Into::into),
        ..base
    }
}

fn greedy_config(cfg: &RunConfig) -> GreedyConfig {
    let base = GreedyConfig::default();
    GreedyConfig {
        grid_size: cfg.grid_size.unwrap_or(base.grid_size),
        max_sweeps: cfg.max_sweeps.unwrap_or(base.max_sweeps),
        objective: cfg.objective().into(),
    }
}

const DEFAULT_SHARED_THRESHOLD: f64 = 0.5;

fn run_method(
    method: Method,
    cfg: &RunConfig,
    p: &Prepared,
    target: f64,
) -> Result<FitResult, CliError> {
    let tau = cfg.tau_init.unwrap_or(DEFAULT_SHARED_THRESHOLD);
    Ok(match (&p.data, &p.expr) {
        (Loaded::Single(ds), Some(e)) => match method {
            Method::Trusthresh => fit(ds, e, &trusthresh_config(cfg, target))?,
            Method::Sglthresh => sgl_thresh_fit(ds, e, &sgl_config(cfg), target, cfg.alpha())?,
            Method::Greedy => greedy_thresh(ds, e, &greedy_config(cfg), target)?,
            Method::Default => def_thresh(ds, e, tau, target)?,
        },
        (Loaded::Multi(ds), _) => match method {
            Method::Trusthresh => fit_multilabel(ds, &trusthresh_config(cfg, target))?,
            Method::Sglthresh => sgl_thresh_fit_multilabel(ds, &sgl_config(cfg))?,
            Method::Greedy => greedy_thresh_multilabel(ds, &greedy_config(cfg))?,
            Method::Default => def_thresh_multilabel(ds, tau)?,
        },
        (Loaded::Single(_), None) => return Err(CliError::config("no decision expression")),
    })
}

fn echo(cfg: &RunConfig) -> Value {
    let resolved = RunConfig {
        method: Some(cfg.method()),
        objective: Some(cfg.objective()),
        alpha: match cfg.objective() {
            ObjectiveName::RecallAtPrecision => Some(cfg.alpha()),
            ObjectiveName::MicroF1 => None,
        },
        ..cfg.clone()
    };
    let mut v = serde_json::to_value(resolved).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.retain(|_, v| !v.is_null());
    }
    v
}

fn target_of(cfg: &RunConfig) -> f64 {
    match cfg.objective() {
        ObjectiveName::RecallAtPrecision => cfg.target_precision.unwrap_or(f64::NAN),
        ObjectiveName::MicroF1 => 0.0,
    }
}

fn target_value(cfg: &RunConfig, target: f64) -> Value {
    match cfg.objective() {
        ObjectiveName::RecallAtPrecision => json!(target),
        ObjectiveName::MicroF1 => Value::Null,
    }
}

fn exit_for(feasible: bool) -> i32 {
    if feasible {
        EXIT_FEASIBLE
    } else {
        EXIT_INFEASIBLE
    }
}

fn common_fields(m: &mut Map<String, Value>, cfg: &RunConfig, p: &Prepared) {
    m.insert("objective".into(), json!(cfg.objective()));
    m.insert("subtasks".into(), json!(p.names()));
    m.insert("expression".into(), p.expr_text());
}

fn timed_run(
    method: Method,
    cfg: &RunConfig,
    p: &Prepared,
    target: f64,
) -> Result<(FitResult, MetricReport, f64), CliError> {
    let start = Instant::now();
    let res = run_method(method, cfg, p, target)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let metrics = p.evaluate(&res.thresholds_raw)?;
    Ok((res, metrics, ms))
}

pub fn run_fit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg, false)?;
    let target = target_of(cfg);
    let method = cfg.method();
    let (res, metrics, ms) = timed_run(method, cfg, &p, target)?;
    let mut m = report::header("fit");
    m.insert("method".into(), json!(method.name()));
    common_fields(&mut m, cfg, &p);
    m.insert("target_precision".into(), target_value(cfg, target));
    m.insert("config".into(), echo(cfg));
    m.extend(report::fit_fields(
        p.names(),
        &res,
        &metrics,
        ms,
        cfg.trace.unwrap_or(false),
    ));
    Ok(Outcome {
        report: Value::Object(m),
        exit_code: exit_for(res.feasible),
    })
}

pub fn run_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let methods = cfg.methods.clone().unwrap_or_default();
    let mut distinct = methods.clone();
    distinct.sort_by_key(|m| m.name());
    distinct.dedup();
    if distinct.len() < 2 || distinct.len() != methods.len() {
        return Err(CliError::config(
            "compare needs at least two distinct methods",
        ));
    }
    let p = prepare(cfg, true)?;
    let targets = match cfg.objective() {
        ObjectiveName::RecallAtPrecision => cfg.target_list(),
        ObjectiveName::MicroF1 => vec![0.0],
    };
    let mut rows = Vec::new();
    for &target in &targets {
        for &method in &methods {
            let (res, metrics, ms) = timed_run(method, cfg, &p, target)?;
            let mut row = Map::new();
            row.insert("method".into(), json!(method.name()));
            row.insert("target_precision".into(), target_value(cfg, target));
            row.insert("precision".into(), json!(metrics.precision));
            row.insert("recall".into(), json!(metrics.recall));
            row.insert("f1".into(), json!(metrics.f1));
            row.extend(report::fit_fields(
                p.names(),
                &res,
                &metrics,
                ms,
                cfg.trace.unwrap_or(false),
            ));
            rows.push(Value::Object(row));
        }
    }
    let mut m = report::header("compare");
    common_fields(&mut m, cfg, &p);
    m.insert("config".into(), echo(cfg));
    m.insert("rows".into(), Value::Array(rows));
    Ok(Outcome {
        report: Value::Object(m),
        exit_code: EXIT_FEASIBLE,
    })
}

pub fn run_oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg, false)?;
    let grid = cfg.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    let target = target_of(cfg);
    let res = match (&p.data, &p.expr) {
        (Loaded::Single(ds), Some(e)) => {
            grid_oracle(ds, e, grid, target, Objective::RecallAtPrecision)?
        }
        (Loaded::Multi(ds), _) => grid_oracle_multilabel(ds, grid)?,
        (Loaded::Single(_), None) => return Err(CliError::config("no decision expression")),
    };
    let metrics = p.evaluate(&res.thresholds)?;
    let mut m = report::header("oracle");
    common_fields(&mut m, cfg, &p);
    m.insert("target_precision".into(), target_value(cfg, target));
    m.insert(
        "thresholds_raw".into(),
        report::named(p.names(), &res.thresholds),
    );
    m.insert("metrics".into(), report::metrics(&metrics));
    m.insert("feasible".into(), json!(res.feasible));
    m.insert("grid_size".into(), json!(res.grid_size));
    m.insert("cells_evaluated".into(), json!(res.cells_evaluated));
    Ok(Outcome {
        report: Value::Object(m),
        exit_code: exit_for(res.feasible),
    })
}

/// Threshold map, expression text and target stored in an earlier report.
type StoredRun = (Vec<(String, f64)>, Option<String>, Option<f64>);

fn read_report(path: &PathBuf) -> Result<StoredRun, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read report {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("report {}: {e}", path.display())))?;
    let map = v
        .get("thresholds_raw")
        .and_then(Value::as_object)
        .ok_or_else(|| CliError::config("report has no thresholds_raw object"))?;
    let thresholds = map
        .iter()
        .map(|(k, x)| {
            x.as_f64()
                .map(|f| (k.clone(), f))
                .ok_or_else(|| CliError::config(format!("threshold `{k}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expr = v
        .get("expression")
        .and_then(Value::as_str)
        .map(str::to_string);
    let target = v.get("target_precision").and_then(Value::as_f64);
    Ok((thresholds, expr, target))
}

pub fn run_eval(cfg: &RunConfig, source: &EvalSource) -> Result<Outcome, CliError> {
    let (pairs, report_expr, report_target) = match source {
        EvalSource::Thresholds(t) => (t.clone(), None, None),
        EvalSource::Report(path) => read_report(path)?,
    };
    let data = load(cfg)?;
    let names = data.names().to_vec();
    let text = cfg.expression_text()?.or(report_expr);
    let expr = match &data {
        Loaded::Single(_) => Some(
            build_expr(cfg, &names, text)?
                .ok_or_else(|| CliError::config("eval on single-label data needs an expression"))?,
        ),
        Loaded::Multi(_) => None,
    };
    let p = Prepared { data, expr };

    let mut thresholds = Vec::with_capacity(names.len());
    for name in &names {
        let v = pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| CliError::config(format!("no threshold for `{name}`")))?;
        thresholds.push(v);
    }
    if let Some((extra, _)) = pairs.iter().find(|(n, _)| !names.contains(n)) {
        return Err(CliError::config(format!(
            "threshold for unknown subtask `{extra}`"
        )));
    }

    let metrics = p.evaluate(&thresholds)?;
    let target = match &p.data {
        Loaded::Single(_) => cfg.target_precision.or(report_target),
        Loaded::Multi(_) => None,
    };
    let feasible = target.map(|t| metrics.precision >= t);
    let mut m = report::header("eval");
    m.insert("subtasks".into(), json!(names));
    m.insert("expression".into(), p.expr_text());
    m.insert("thresholds_raw".into(), report::named(&names, &thresholds));
    m.insert("metrics".into(), report::metrics(&metrics));
    m.insert("target_precision".into(), json!(target));
    m.insert("feasible".into(), json!(feasible));
    Ok(Outcome {
        report: Value::Object(m),
        exit_code: exit_for(feasible.unwrap_or(true)),
    })
}
