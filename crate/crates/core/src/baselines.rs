//! Comparison methods: a single shared threshold, greedy coordinate ascent
//! over a threshold grid, and surrogate-gradient fitting with a sigmoid
//! surrogate and learnable sharpness.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::DecisionExpr;
use crate::metrics::MetricReport;
use crate::model::{
    Dataset, FitResult, MultiLabelDataset, Objective, ScoreMatrix, TraceRecord, UpdateRule,
};
use crate::optimizer::{
    check_labels, evaluate_outputs, hard_counts, identity_outputs, run_loop, LoopParams,
    LossParams, SurrogateKind,
};

fn fixed_result(thresholds: Vec<f64>, metrics: &MetricReport, feasible: bool) -> FitResult {
    FitResult {
        thresholds_normalized: thresholds.clone(),
        thresholds_raw: thresholds,
        widths: None,
        sigmas: None,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        feasible,
        trace: Vec::new(),
        iterations_run: 0,
        normalization: None,
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("threshold must be in [0, 1]"))
    }
}

/// Evaluates the decision function with every raw threshold set to `tau`.
pub fn def_thresh(
    dataset: &Dataset,
    expr: &DecisionExpr,
    tau: f64,
    target_precision: f64,
) -> Result<FitResult> {
    check_tau(tau)?;
    let thresholds = vec![tau; dataset.n_subtasks()];
    let m = evaluate_outputs(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        &thresholds,
    )?;
    let feasible = m.precision >= target_precision;
    Ok(fixed_result(thresholds, &m, feasible))
}

/// Shared threshold `tau` for every class of a multi-label dataset.
pub fn def_thresh_multilabel(dataset: &MultiLabelDataset, tau: f64) -> Result<FitResult> {
    check_tau(tau)?;
    let thresholds = vec![tau; dataset.n_classes()];
    let m = evaluate_outputs(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        &thresholds,
    )?;
    Ok(fixed_result(thresholds, &m, true))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub grid_size: usize,
    pub max_sweeps: usize,
    pub objective: Objective,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            grid_size: 101,
            max_sweeps: 10,
            objective: Objective::RecallAtPrecision,
        }
    }
}

/// Ordering used to pick among grid candidates and visited configurations.
/// Returns true when `a` is strictly better than `b`.
fn greedy_better(objective: Objective, target: f64, a: &MetricReport, b: &MetricReport) -> bool {
    match objective {
        Objective::MicroF1 => a.f1 > b.f1,
        Objective::RecallAtPrecision => {
            let (fa, fb) = (a.precision >= target, b.precision >= target);
            match (fa, fb) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => a.recall > b.recall,
                (false, false) => {
                    a.precision > b.precision || (a.precision == b.precision && a.recall > b.recall)
                }
            }
        }
    }
}

fn greedy_impl(
    scores: &ScoreMatrix,
    labels: &[bool],
    exprs: &[DecisionExpr],
    config: &GreedyConfig,
    target: f64,
) -> Result<FitResult> {
    if config.grid_size < 2 {
        return Err(Error::InvalidConfig("grid size must be at least 2"));
    }
    if config.max_sweeps == 0 {
        return Err(Error::InvalidConfig("max_sweeps must be positive"));
    }
    let n = scores.n_cols();
    let grid: Vec<f64> = (0..config.grid_size)
        .map(|k| k as f64 / (config.grid_size - 1) as f64)
        .collect();
    let mut thresholds = vec![0.5; n];
    let mut bits = vec![false; n];
    let mut current = evaluate_outputs(scores, labels, exprs, &thresholds)?;
    let loss_of = |m: &MetricReport| match config.objective {
        Objective::MicroF1 => -m.f1,
        Objective::RecallAtPrecision => -m.recall,
    };
    let record = |step: usize, m: &MetricReport, t: &[f64]| TraceRecord {
        iteration: step,
        loss: loss_of(m),
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        tau_hat: t.to_vec(),
        shape: Vec::new(),
    };

    let mut trace = vec![record(0, &current, &thresholds)];
    let mut best = (thresholds.clone(), current);
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for i in 0..n {
            let mut pick: Option<(f64, MetricReport)> = None;
            let mut trial = thresholds.clone();
            for &g in &grid {
                trial[i] = g;
                let m = hard_counts(scores, labels, exprs, &trial, &mut bits);
                // ascending grid + strict comparison keeps the smallest threshold on ties
                if pick
                    .as_ref()
                    .is_none_or(|(_, pm)| greedy_better(config.objective, target, &m, pm))
                {
                    pick = Some((g, m));
                }
            }
            let (g, m) = pick.expect("grid is non-empty");
            if g != thresholds[i] {
                changed = true;
                thresholds[i] = g;
            }
            current = m;
            trace.push(record(trace.len(), &current, &thresholds));
            if greedy_better(config.objective, target, &current, &best.1) {
                best = (thresholds.clone(), current);
            }
        }
        if !changed {
            break;
        }
    }

    let (chosen, m) = best;
    let feasible = match config.objective {
        Objective::RecallAtPrecision => m.precision >= target,
        Objective::MicroF1 => true,
    };
    let mut result = fixed_result(chosen, &m, feasible);
    result.trace = trace;
    result.iterations_run = sweeps;
    Ok(result)
}

/// Greedy coordinate ascent over an evenly spaced raw-threshold grid.
///
/// Starting from 0.5 everywhere, each subtask in column order takes the grid
/// value with the highest recall among those meeting the precision target
/// (smallest threshold on ties), or the highest precision if none does.
/// Stops after a sweep without changes or after `max_sweeps`, and reports
/// the best configuration visited.
pub fn greedy_thresh(
    dataset: &Dataset,
    expr: &DecisionExpr,
    config: &GreedyConfig,
    target_precision: f64,
) -> Result<FitResult> {
    greedy_impl(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        config,
        target_precision,
    )
}

/// Greedy per-class search maximizing pooled micro-F1.
pub fn greedy_thresh_multilabel(
    dataset: &MultiLabelDataset,
    config: &GreedyConfig,
) -> Result<FitResult> {
    let config = GreedyConfig {
        objective: Objective::MicroF1,
        ..config.clone()
    };
    greedy_impl(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        &config,
        0.0,
    )
}

/// Settings for the sigmoid-surrogate baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SglConfig {
    pub tau_init: f64,
    pub sigma_init: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub normalize_scores: bool,
    pub learn_sigma: bool,
    pub update_rule: UpdateRule,
    pub objective: Objective,
}

impl SglConfig {
    pub fn recall_at_precision() -> Self {
        Self {
            tau_init: 0.3,
            sigma_init: 50.0,
            learning_rate: 0.001,
            iterations: 4000,
            normalize_scores: false,
            learn_sigma: true,
            update_rule: UpdateRule::default(),
            objective: Objective::RecallAtPrecision,
        }
    }

    pub fn micro_f1() -> Self {
        Self {
            learning_rate: 0.01,
            iterations: 100,
            objective: Objective::MicroF1,
            ..Self::recall_at_precision()
        }
    }

    fn validate(&self) -> Result<()> {
        check_tau(self.tau_init)?;
        if !(self.sigma_init > 0.0 && self.sigma_init.is_finite()) {
            return Err(Error::InvalidConfig("sigma_init must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive"));
        }
        Ok(())
    }

    fn loop_params(&self, target_precision: f64, alpha: f64) -> LoopParams {
        LoopParams {
            kind: SurrogateKind::Sigmoid,
            tau_init: self.tau_init,
            shape_init: libm::log(self.sigma_init),
            learn_shape: self.learn_sigma,
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            update_rule: self.update_rule,
            loss: LossParams {
                objective: self.objective,
                target_precision,
                alpha,
            },
            normalize_scores: self.normalize_scores,
        }
    }
}

/// Surrogate-gradient fit with `logistic(sigma z)` as the step surrogate and
/// `log sigma` learned per subtask. Shares the loop and best-feasible-iterate
/// selection with [`crate::optimizer::fit`].
pub fn sgl_thresh_fit(
    dataset: &Dataset,
    expr: &DecisionExpr,
    config: &SglConfig,
    target_precision: f64,
    alpha: f64,
) -> Result<FitResult> {
    config.validate()?;
    if config.objective == Objective::RecallAtPrecision
        && !(target_precision > 0.0 && target_precision <= 1.0)
    {
        return Err(Error::InvalidConfig("target precision must be in (0, 1]"));
    }
    check_labels(dataset.labels(), config.objective)?;
    run_loop(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        &config.loop_params(target_precision, alpha),
    )
}

/// Sigmoid-surrogate fit of per-class thresholds for micro-F1.
pub fn sgl_thresh_fit_multilabel(
    dataset: &MultiLabelDataset,
    config: &SglConfig,
) -> Result<FitResult> {
    config.validate()?;
    let config = SglConfig {
        objective: Objective::MicroF1,
        ..config.clone()
    };
    run_loop(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        &config.loop_params(0.0, 0.0),
    )
}
