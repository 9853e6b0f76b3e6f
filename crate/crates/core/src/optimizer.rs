//! Surrogate-gradient threshold fitting.
//!
//! The forward pass thresholds (normalized) scores with the hard step
//! function and pushes the bits through the numeric decision function. The
//! backward pass replaces the step derivative with a truncated-sine surrogate
//! and chains it through the decision-function partials and the partials of
//! the loss with respect to each prediction.
//!
//! The same loop, parameterized by [`SurrogateKind`], also drives the
//! sigmoid-surrogate baseline in [`crate::baselines`].

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, DecisionExpr};
use crate::metrics::{MetricKind, MetricReport, SoftCounts};
use crate::model::{
    logit, Dataset, FitConfig, FitResult, MultiLabelDataset, Objective, ScoreMatrix,
    ThresholdState, TraceRecord, UpdateRule,
};
use crate::normalize::{denormalize_threshold, rank_normalize_scores};
use crate::surrogate::{
    logistic, sigmoid_grad_sigma, sigmoid_grad_z, sigmoid_step, sine_grads, sine_step,
};
use crate::update::Updater;

/// Step-function surrogate used in the backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    /// Truncated sine with width `logistic(omega)`.
    Sine,
    /// Sigmoid `logistic(sigma z)` with `sigma = exp(log_sigma)`.
    Sigmoid,
}

impl SurrogateKind {
    /// Maps the unconstrained shape parameter to its natural value
    /// (width or sigma).
    #[inline]
    pub fn shape_value(self, param: f64) -> f64 {
        match self {
            SurrogateKind::Sine => logistic(param),
            SurrogateKind::Sigmoid => libm::exp(param),
        }
    }

    #[inline]
    fn smooth(self, z: f64, shape: f64) -> f64 {
        match self {
            SurrogateKind::Sine => sine_step(z, shape),
            SurrogateKind::Sigmoid => sigmoid_step(z, shape),
        }
    }

    /// Surrogate derivatives with respect to `z` and to the unconstrained
    /// shape parameter.
    #[inline]
    fn grads(self, z: f64, shape: f64) -> (f64, f64) {
        match self {
            SurrogateKind::Sine => {
                let (gz, gw) = sine_grads(z, shape);
                (gz, gw * shape * (1.0 - shape))
            }
            SurrogateKind::Sigmoid => (
                sigmoid_grad_z(z, shape),
                sigmoid_grad_sigma(z, shape) * shape,
            ),
        }
    }
}

/// Objective pieces needed to turn metrics into a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LossParams {
    pub objective: Objective,
    pub target_precision: f64,
    pub alpha: f64,
}

impl LossParams {
    fn from_config(config: &FitConfig) -> Self {
        Self {
            objective: config.objective,
            target_precision: config.target_precision,
            alpha: config.alpha,
        }
    }

    /// Loss value and `d loss / d prediction` for labels 0 and 1.
    fn evaluate(
        &self,
        recall: f64,
        precision: f64,
        f1: f64,
        counts: &SoftCounts,
    ) -> (f64, [f64; 2]) {
        match self.objective {
            Objective::RecallAtPrecision => {
                let shortfall = self.target_precision - precision;
                let penalty_active = shortfall > 0.0;
                let loss = -recall
                    + if penalty_active {
                        self.alpha * shortfall
                    } else {
                        0.0
                    };
                let dr = counts.partial_coefficients(MetricKind::Recall);
                let mut coeff = [-dr[0], -dr[1]];
                if penalty_active {
                    let dp = counts.partial_coefficients(MetricKind::Precision);
                    coeff[0] -= self.alpha * dp[0];
                    coeff[1] -= self.alpha * dp[1];
                }
                (loss, coeff)
            }
            Objective::MicroF1 => {
                let df = counts.partial_coefficients(MetricKind::MicroF1);
                (-f1, [-df[0], -df[1]])
            }
        }
    }

    fn is_feasible(&self, precision: f64) -> bool {
        match self.objective {
            Objective::RecallAtPrecision => precision >= self.target_precision,
            Objective::MicroF1 => true,
        }
    }
}

/// Scores, labels and compiled decision functions for one or more outputs
/// per sample. A single policy has one output; the multi-label setting has
/// one identity output per class.
pub(crate) struct Problem<'a> {
    scores: &'a ScoreMatrix,
    labels: &'a [bool],
    outputs: Vec<CompiledExpr>,
    offsets: Vec<usize>,
    stride: usize,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(
        scores: &'a ScoreMatrix,
        labels: &'a [bool],
        exprs: &[DecisionExpr],
    ) -> Result<Self> {
        let n = scores.n_cols();
        for e in exprs {
            if e.max_leaf() >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.max_leaf() + 1,
                });
            }
        }
        if labels.len() != scores.n_rows() * exprs.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.n_rows() * exprs.len(),
                found: labels.len(),
            });
        }
        let outputs: Vec<CompiledExpr> = exprs.iter().map(CompiledExpr::compile).collect();
        let mut offsets = Vec::with_capacity(outputs.len());
        let mut stride = 0;
        for o in &outputs {
            offsets.push(stride);
            stride += o.leaves().len();
        }
        Ok(Self {
            scores,
            labels,
            outputs,
            offsets,
            stride,
        })
    }

    fn n_outputs(&self) -> usize {
        self.outputs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Hard,
    Smooth,
}

/// Result of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardState {
    n_samples: usize,
    n_subtasks: usize,
    n_outputs: usize,
    /// `N x n` leaf inputs: step outputs in {0, 1} (or surrogate values when
    /// produced by the smoothed objective).
    pub bits: Vec<f64>,
    /// `N x K` numeric decision outputs.
    pub predictions: Vec<f64>,
    /// Ragged `N x sum(leaves)` decision partials evaluated at `bits`.
    decision_partials: Vec<f64>,
    leaves: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    stride: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub loss: f64,
    /// `d loss / d prediction` for samples labelled 0 and 1.
    pub dloss_dprediction: [f64; 2],
}

impl ForwardState {
    pub fn hard_bit(&self, sample: usize, subtask: usize) -> bool {
        self.bits[sample * self.n_subtasks + subtask] > 0.5
    }

    pub fn prediction(&self, sample: usize) -> bool {
        self.predictions[sample * self.n_outputs] > 0.5
    }

    /// `d prediction / d bit` for `subtask` on `sample`, summed over outputs.
    pub fn decision_partial(&self, sample: usize, subtask: usize) -> f64 {
        let mut total = 0.0;
        for (k, leaves) in self.leaves.iter().enumerate() {
            if let Ok(slot) = leaves.binary_search(&subtask) {
                total += self.decision_partials[sample * self.stride + self.offsets[k] + slot];
            }
        }
        total
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// Loss gradients with respect to the learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientState {
    pub d_tau_hat: Vec<f64>,
    /// Gradient for the unconstrained shape parameter (`omega` for the sine
    /// surrogate, `log sigma` for the sigmoid one).
    pub d_omega: Vec<f64>,
}

impl ForwardState {
    fn for_problem(problem: &Problem<'_>) -> Self {
        let scores = problem.scores;
        let (rows, n, k_out) = (scores.n_rows(), scores.n_cols(), problem.n_outputs());
        ForwardState {
            n_samples: rows,
            n_subtasks: n,
            n_outputs: k_out,
            bits: vec![0.0; rows * n],
            predictions: vec![0.0; rows * k_out],
            decision_partials: vec![0.0; rows * problem.stride],
            leaves: problem
                .outputs
                .iter()
                .map(|o| o.leaves().to_vec())
                .collect(),
            offsets: problem.offsets.clone(),
            stride: problem.stride,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            loss: 0.0,
            dloss_dprediction: [0.0; 2],
        }
    }
}

fn forward_impl(
    problem: &Problem<'_>,
    tau: &[f64],
    shape: &[f64],
    kind: SurrogateKind,
    mode: Mode,
    loss: &LossParams,
) -> ForwardState {
    let mut out = ForwardState::for_problem(problem);
    forward_into(problem, tau, shape, kind, mode, loss, &mut out);
    out
}

/// Forward pass into buffers sized by [`ForwardState::for_problem`] for the
/// same problem. Every buffer entry is overwritten.
fn forward_into(
    problem: &Problem<'_>,
    tau: &[f64],
    shape: &[f64],
    kind: SurrogateKind,
    mode: Mode,
    loss: &LossParams,
    out: &mut ForwardState,
) {
    let scores = problem.scores;
    let (rows, n, k_out) = (scores.n_rows(), scores.n_cols(), problem.n_outputs());
    let bits = &mut out.bits;
    let predictions = &mut out.predictions;
    let partials = &mut out.decision_partials;
    let mut counts = SoftCounts::default();
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);

    let mut scratch: Vec<_> = problem.outputs.iter().map(|o| o.scratch()).collect();
    let max_leaves = problem
        .outputs
        .iter()
        .map(|o| o.leaves().len())
        .max()
        .unwrap_or(0);
    let mut local = vec![0.0; max_leaves];

    for j in 0..rows {
        let row = scores.row(j);
        let bit_row = &mut bits[j * n..(j + 1) * n];
        for i in 0..n {
            let z = row[i] - tau[i];
            bit_row[i] = match mode {
                Mode::Hard => (z > 0.0) as u8 as f64,
                Mode::Smooth => kind.smooth(z, shape[i]),
            };
        }
        for (k, out) in problem.outputs.iter().enumerate() {
            let leaves = out.leaves();
            for (slot, &i) in leaves.iter().enumerate() {
                local[slot] = bit_row[i];
            }
            let start = j * problem.stride + problem.offsets[k];
            let value = out.eval_with_partials(
                &local[..leaves.len()],
                &mut scratch[k],
                &mut partials[start..start + leaves.len()],
            );
            predictions[j * k_out + k] = value;
            let label = problem.labels[j * k_out + k];
            counts.push(label, value);
            if mode == Mode::Hard {
                match (label, value > 0.5) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
        }
    }

    let (recall, precision, f1) = match mode {
        Mode::Hard => {
            let m = MetricReport::from_counts(tp, fp, fn_, tn);
            (m.recall, m.precision, m.f1)
        }
        Mode::Smooth => (
            counts.smooth_value(MetricKind::Recall),
            counts.smooth_value(MetricKind::Precision),
            counts.smooth_value(MetricKind::MicroF1),
        ),
    };
    let (loss_value, coeff) = loss.evaluate(recall, precision, f1, &counts);
    out.precision = precision;
    out.recall = recall;
    out.f1 = f1;
    out.loss = loss_value;
    out.dloss_dprediction = coeff;
}

fn backward_impl(
    forward: &ForwardState,
    scores: &ScoreMatrix,
    labels: &[bool],
    tau: &[f64],
    shape: &[f64],
    kind: SurrogateKind,
) -> Result<GradientState> {
    let n = scores.n_cols();
    let k_out = forward.n_outputs;
    let coeff = forward.dloss_dprediction;
    let mut d_tau = vec![0.0; n];
    let mut d_shape = vec![0.0; n];
    for j in 0..forward.n_samples {
        let row = scores.row(j);
        for (k, leaves) in forward.leaves.iter().enumerate() {
            let c = coeff[labels[j * k_out + k] as usize];
            if c == 0.0 {
                continue;
            }
            let start = j * forward.stride + forward.offsets[k];
            for (slot, &i) in leaves.iter().enumerate() {
                let d = forward.decision_partials[start + slot];
                if d == 0.0 {
                    continue;
                }
                let (gz, gs) = kind.grads(row[i] - tau[i], shape[i]);
                // dz/dtau = -1
                d_tau[i] -= c * d * gz;
                d_shape[i] += c * d * gs;
            }
        }
    }
    if d_tau.iter().chain(&d_shape).any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    Ok(GradientState {
        d_tau_hat: d_tau,
        d_omega: d_shape,
    })
}

fn single_problem<'a>(dataset: &'a Dataset, expr: &DecisionExpr) -> Result<Problem<'a>> {
    Problem::new(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
    )
}

/// Hard forward pass with the truncated-sine surrogate's parameters.
///
/// `dataset` should already be normalized when `config.normalize_scores` is
/// set; this function does not normalize.
pub fn forward_pass(
    dataset: &Dataset,
    expr: &DecisionExpr,
    state: &ThresholdState,
    config: &FitConfig,
) -> Result<ForwardState> {
    let problem = single_problem(dataset, expr)?;
    check_state(state, dataset.n_subtasks())?;
    Ok(forward_impl(
        &problem,
        &state.tau_hat,
        &state.widths(),
        SurrogateKind::Sine,
        Mode::Hard,
        &LossParams::from_config(config),
    ))
}

/// Surrogate-gradient backward pass for a forward state produced from the
/// same dataset and parameters.
pub fn backward_pass(
    forward: &ForwardState,
    dataset: &Dataset,
    state: &ThresholdState,
) -> Result<GradientState> {
    check_state(state, dataset.n_subtasks())?;
    if forward.n_samples != dataset.n_samples() || forward.n_subtasks != dataset.n_subtasks() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_samples(),
            found: forward.n_samples,
        });
    }
    backward_impl(
        forward,
        dataset.scores(),
        dataset.labels(),
        &state.tau_hat,
        &state.widths(),
        SurrogateKind::Sine,
    )
}

/// Fully smoothed objective: the surrogate replaces the step function in the
/// forward pass too, and metrics use their smooth formulas. Returns the loss
/// and its analytic gradient, computed by the same backward code the fit
/// loop uses. Intended for gradient verification.
pub fn smoothed_objective(
    dataset: &Dataset,
    expr: &DecisionExpr,
    state: &ThresholdState,
    config: &FitConfig,
) -> Result<(f64, GradientState)> {
    let problem = single_problem(dataset, expr)?;
    check_state(state, dataset.n_subtasks())?;
    let widths = state.widths();
    let fwd = forward_impl(
        &problem,
        &state.tau_hat,
        &widths,
        SurrogateKind::Sine,
        Mode::Smooth,
        &LossParams::from_config(config),
    );
    let grads = backward_impl(
        &fwd,
        dataset.scores(),
        dataset.labels(),
        &state.tau_hat,
        &widths,
        SurrogateKind::Sine,
    )?;
    Ok((fwd.loss, grads))
}

fn check_state(state: &ThresholdState, n: usize) -> Result<()> {
    for len in [state.tau_hat.len(), state.omega.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    Ok(())
}

/// Hard evaluation of every output at raw thresholds, pooled over outputs.
///
/// Uses boolean evaluation of the expression tree, independent of the
/// numeric tape the fit loop differentiates.
pub(crate) fn evaluate_outputs(
    scores: &ScoreMatrix,
    labels: &[bool],
    exprs: &[DecisionExpr],
    thresholds: &[f64],
) -> Result<MetricReport> {
    let n = scores.n_cols();
    if thresholds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: thresholds.len(),
        });
    }
    Problem::new(scores, labels, exprs)?;
    let mut bits = vec![false; n];
    Ok(hard_counts(scores, labels, exprs, thresholds, &mut bits))
}

/// Unchecked core of [`evaluate_outputs`]; `bits` is scratch of length `n`.
pub(crate) fn hard_counts(
    scores: &ScoreMatrix,
    labels: &[bool],
    exprs: &[DecisionExpr],
    thresholds: &[f64],
    bits: &mut [bool],
) -> MetricReport {
    let k_out = exprs.len();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for j in 0..scores.n_rows() {
        for (i, (&q, &t)) in scores.row(j).iter().zip(thresholds).enumerate() {
            bits[i] = q > t;
        }
        for (k, e) in exprs.iter().enumerate() {
            match (labels[j * k_out + k], e.eval_boolean(bits)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    MetricReport::from_counts(tp, fp, fn_, tn)
}

/// Hard metrics of `expr` on `dataset` at the given raw thresholds.
pub fn evaluate_thresholds(
    dataset: &Dataset,
    expr: &DecisionExpr,
    thresholds: &[f64],
) -> Result<MetricReport> {
    evaluate_outputs(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        thresholds,
    )
}

/// Pooled (micro) hard metrics of per-class thresholds on multi-label data.
pub fn evaluate_thresholds_multilabel(
    dataset: &MultiLabelDataset,
    thresholds: &[f64],
) -> Result<MetricReport> {
    evaluate_outputs(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        thresholds,
    )
}

pub(crate) fn identity_outputs(classes: usize) -> Vec<DecisionExpr> {
    (0..classes).map(DecisionExpr::Leaf).collect()
}

pub(crate) fn check_labels(labels: &[bool], objective: Objective) -> Result<()> {
    if objective == Objective::RecallAtPrecision {
        let positives = labels.iter().filter(|&&y| y).count();
        let negatives = labels.len() - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::DegenerateLabels {
                positives,
                negatives,
            });
        }
    }
    Ok(())
}

/// Settings of the shared surrogate-gradient loop.
#[derive(Debug, Clone)]
pub(crate) struct LoopParams {
    pub kind: SurrogateKind,
    pub tau_init: f64,
    /// Unconstrained shape parameter at initialization.
    pub shape_init: f64,
    pub learn_shape: bool,
    pub learning_rate: f64,
    pub iterations: usize,
    pub update_rule: UpdateRule,
    pub loss: LossParams,
    pub normalize_scores: bool,
}

impl LoopParams {
    fn sine(config: &FitConfig) -> Self {
        Self {
            kind: SurrogateKind::Sine,
            tau_init: config.tau_init,
            shape_init: logit(config.width_init),
            learn_shape: config.learn_widths,
            learning_rate: config.learning_rate,
            iterations: config.iterations,
            update_rule: config.update_rule,
            loss: LossParams::from_config(config),
            normalize_scores: config.normalize_scores,
        }
    }
}

/// Runs the full-batch loop and selects the best feasible iterate.
pub(crate) fn run_loop(
    scores: &ScoreMatrix,
    labels: &[bool],
    exprs: &[DecisionExpr],
    plan: &LoopParams,
) -> Result<FitResult> {
    check_labels(labels, plan.loss.objective)?;
    let (work, maps) = if plan.normalize_scores {
        let (s, m) = rank_normalize_scores(scores);
        (Cow::Owned(s), Some(m))
    } else {
        (Cow::Borrowed(scores), None)
    };
    let problem = Problem::new(&work, labels, exprs)?;
    let n = scores.n_cols();
    let mut tau = vec![plan.tau_init.clamp(0.0, 1.0); n];
    let mut shape_param = vec![plan.shape_init; n];
    let mut tau_updater = Updater::new(plan.update_rule, n);
    let mut shape_updater = Updater::new(plan.update_rule, n);

    let mut trace = Vec::with_capacity(plan.iterations + 1);
    let mut best: Option<usize> = None;
    let mut fwd = ForwardState::for_problem(&problem);
    for t in 0..=plan.iterations {
        let shape: Vec<f64> = shape_param
            .iter()
            .map(|&p| plan.kind.shape_value(p))
            .collect();
        forward_into(
            &problem,
            &tau,
            &shape,
            plan.kind,
            Mode::Hard,
            &plan.loss,
            &mut fwd,
        );
        let better = match (plan.loss.objective, best) {
            (_, _) if !plan.loss.is_feasible(fwd.precision) => false,
            (_, None) => true,
            (Objective::RecallAtPrecision, Some(b)) => fwd.recall > trace_recall(&trace, b),
            (Objective::MicroF1, Some(b)) => fwd.f1 > trace_f1(&trace, b),
        };
        if better {
            best = Some(t);
        }
        trace.push(TraceRecord {
            iteration: t,
            loss: fwd.loss,
            precision: fwd.precision,
            recall: fwd.recall,
            f1: fwd.f1,
            tau_hat: tau.clone(),
            shape,
        });
        if t == plan.iterations {
            break;
        }
        let grads = backward_impl(&fwd, &work, labels, &tau, &trace[t].shape, plan.kind)?;
        tau_updater.apply(&mut tau, &grads.d_tau_hat, plan.learning_rate);
        for v in &mut tau {
            *v = v.clamp(0.0, 1.0);
        }
        if plan.learn_shape {
            shape_updater.apply(&mut shape_param, &grads.d_omega, plan.learning_rate);
        }
    }

    let chosen = best.unwrap_or(trace.len() - 1);
    let record = &trace[chosen];
    let thresholds_normalized = record.tau_hat.clone();
    let thresholds_raw = match &maps {
        Some(maps) => thresholds_normalized
            .iter()
            .zip(maps)
            .map(|(&t, m)| denormalize_threshold(t, m))
            .collect::<Result<Vec<_>>>()?,
        None => thresholds_normalized.clone(),
    };
    let metrics = evaluate_outputs(scores, labels, exprs, &thresholds_raw)?;
    debug_assert_eq!(metrics.precision, record.precision);
    debug_assert_eq!(metrics.recall, record.recall);
    let shape = record.shape.clone();
    let (widths, sigmas) = match plan.kind {
        SurrogateKind::Sine => (Some(shape), None),
        SurrogateKind::Sigmoid => (None, Some(shape)),
    };
    Ok(FitResult {
        thresholds_normalized,
        thresholds_raw,
        widths,
        sigmas,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        feasible: plan.loss.is_feasible(metrics.precision),
        trace,
        iterations_run: plan.iterations,
        normalization: maps,
    })
}

fn trace_recall(trace: &[TraceRecord], k: usize) -> f64 {
    trace[k].recall
}

fn trace_f1(trace: &[TraceRecord], k: usize) -> f64 {
    trace[k].f1
}

/// Fits per-subtask thresholds for one decision function.
///
/// Returns the feasible iterate with the highest recall (or the highest-F1
/// iterate for [`Objective::MicroF1`]); if no iterate meets the precision
/// target the final iterate is returned with `feasible == false`.
pub fn fit(dataset: &Dataset, expr: &DecisionExpr, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    run_loop(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        &LoopParams::sine(config),
    )
}

/// Fits one threshold per class maximizing micro-averaged F1.
pub fn fit_multilabel(dataset: &MultiLabelDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if config.objective != Objective::MicroF1 {
        return Err(Error::InvalidConfig(
            "multi-label fitting requires the micro_f1 objective",
        ));
    }
    run_loop(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        &LoopParams::sine(config),
    )
}
