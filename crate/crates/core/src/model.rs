//! Domain types shared across the crate: score matrices, labelled datasets,
//! optimizer state and configuration, and fit results.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::normalize::NormalizationMap;
use crate::surrogate::logistic;

/// Row-major `N x n` matrix of subtask scores with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    names: Vec<String>,
    rows: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    /// Validates names and scores. Every score must be finite and in `[0, 1]`.
    pub fn new(names: Vec<String>, rows: usize, values: Vec<f64>) -> Result<Self> {
        validate_names(&names)?;
        if rows == 0 || names.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cols = names.len();
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ScoreOutOfRange {
                    row: k / cols,
                    col: k % cols,
                    value: v,
                });
            }
        }
        Ok(Self {
            names,
            rows,
            values,
        })
    }

    /// Builds a matrix without range checks; used for normalized copies whose
    /// values are produced internally.
    pub(crate) fn from_parts(names: Vec<String>, rows: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * names.len());
        Self {
            names,
            rows,
            values,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.names.len() + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.names.len();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copies column `col` into a new vector.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn validate_names(names: &[String]) -> Result<()> {
    for (k, name) in names.iter().enumerate() {
        if !is_identifier(name) {
            return Err(Error::InvalidSubtaskName(name.clone()));
        }
        if names[..k].contains(name) {
            return Err(Error::DuplicateSubtaskName(name.clone()));
        }
    }
    Ok(())
}

fn validate_labels(labels: &[u8]) -> Result<Vec<bool>> {
    labels
        .iter()
        .enumerate()
        .map(|(row, &value)| match value {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(Error::InvalidLabel { row, value }),
        })
        .collect()
}

/// Subtask scores plus one binary ground-truth decision per sample.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    scores: ScoreMatrix,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(scores: ScoreMatrix, labels: &[u8]) -> Result<Self> {
        if labels.len() != scores.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: scores.n_rows(),
                found: labels.len(),
            });
        }
        let labels = validate_labels(labels)?;
        Ok(Self { scores, labels })
    }

    pub(crate) fn with_scores(&self, scores: ScoreMatrix) -> Self {
        Self {
            scores,
            labels: self.labels.clone(),
        }
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn subtask_names(&self) -> &[String] {
        self.scores.names()
    }

    pub fn n_samples(&self) -> usize {
        self.scores.n_rows()
    }

    pub fn n_subtasks(&self) -> usize {
        self.scores.n_cols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }
}

/// Builds a validated [`Dataset`] from per-sample score rows.
///
/// Column order follows `subtask_names`.
pub fn build_dataset<R: AsRef<[f64]>>(
    subtask_names: &[&str],
    scores: &[R],
    labels: &[u8],
) -> Result<Dataset> {
    let names: Vec<String> = subtask_names.iter().map(|s| s.to_string()).collect();
    if scores.is_empty() || names.is_empty() {
        // still report duplicate names ahead of emptiness
        validate_names(&names)?;
        return Err(Error::EmptyDataset);
    }
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    let mut values = Vec::with_capacity(scores.len() * names.len());
    for row in scores {
        let row = row.as_ref();
        if row.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: row.len(),
            });
        }
        values.extend_from_slice(row);
    }
    let matrix = ScoreMatrix::new(names, scores.len(), values)?;
    Dataset::new(matrix, labels)
}

/// Multi-label data: one score column and one label column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    scores: ScoreMatrix,
    labels: Vec<bool>,
}

impl MultiLabelDataset {
    /// `labels` is row-major `N x C`, matching the score matrix layout.
    pub fn new(scores: ScoreMatrix, labels: &[u8]) -> Result<Self> {
        let expected = scores.n_rows() * scores.n_cols();
        if labels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: labels.len(),
            });
        }
        let labels = validate_labels(labels)?;
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    /// Row-major `N x C` labels.
    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        self.scores.names()
    }

    pub fn n_samples(&self) -> usize {
        self.scores.n_rows()
    }

    pub fn n_classes(&self) -> usize {
        self.scores.n_cols()
    }
}

/// Learnable parameters: normalized thresholds and unconstrained width
/// logits. Widths are `logistic(omega)`, so they stay inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub tau_hat: Vec<f64>,
    pub omega: Vec<f64>,
}

impl ThresholdState {
    pub fn new(n: usize, tau_init: f64, width_init: f64) -> Self {
        let omega = logit(width_init);
        Self {
            tau_hat: alloc::vec![tau_init.clamp(0.0, 1.0); n],
            omega: alloc::vec![omega; n],
        }
    }

    pub fn width(&self, i: usize) -> f64 {
        logistic(self.omega[i])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.omega.iter().map(|&o| logistic(o)).collect()
    }

    pub fn clamp(&mut self) {
        for t in &mut self.tau_hat {
            *t = t.clamp(0.0, 1.0);
        }
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Maximize recall subject to a precision floor (hinge penalty).
    RecallAtPrecision,
    /// Maximize micro-averaged F1 over all outputs.
    MicroF1,
}

/// First-order parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    GradientDescent,
}

impl Default for UpdateRule {
    fn default() -> Self {
        UpdateRule::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub target_precision: f64,
    /// Penalty strictness.
    pub alpha: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub tau_init: f64,
    pub width_init: f64,
    pub objective: Objective,
    pub normalize_scores: bool,
    pub learn_widths: bool,
    pub update_rule: UpdateRule,
}

impl FitConfig {
    pub fn recall_at_precision(target_precision: f64, alpha: f64) -> Self {
        Self {
            target_precision,
            alpha,
            learning_rate: 0.01,
            iterations: 1000,
            tau_init: 0.5,
            width_init: 0.1,
            objective: Objective::RecallAtPrecision,
            normalize_scores: true,
            learn_widths: true,
            update_rule: UpdateRule::default(),
        }
    }

    pub fn micro_f1() -> Self {
        Self {
            target_precision: 0.0,
            alpha: 0.0,
            learning_rate: 0.01,
            iterations: 400,
            tau_init: 0.5,
            width_init: 0.04,
            objective: Objective::MicroF1,
            normalize_scores: true,
            learn_widths: true,
            update_rule: UpdateRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective == Objective::RecallAtPrecision
            && !(self.target_precision > 0.0 && self.target_precision <= 1.0)
        {
            return Err(Error::InvalidConfig("target precision must be in (0, 1]"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be non-negative"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive"));
        }
        if !(0.0..=1.0).contains(&self.tau_init) {
            return Err(Error::InvalidConfig("tau_init must be in [0, 1]"));
        }
        if !(self.width_init > 0.0 && self.width_init < 1.0) {
            return Err(Error::InvalidConfig("width_init must be in (0, 1)"));
        }
        Ok(())
    }
}

/// One evaluated iterate of a fit loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tau_hat: Vec<f64>,
    /// Widths for the sine surrogate, sigmas for the sigmoid surrogate,
    /// empty for methods without a shape parameter.
    pub shape: Vec<f64>,
}

/// Outcome of any threshold search method.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub thresholds_normalized: Vec<f64>,
    pub thresholds_raw: Vec<f64>,
    pub widths: Option<Vec<f64>>,
    pub sigmas: Option<Vec<f64>>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Hard-thresholded precision on the input meets the target.
    pub feasible: bool,
    pub trace: Vec<TraceRecord>,
    pub iterations_run: usize,
    /// Per-subtask maps when scores were rank-normalized.
    pub normalization: Option<Vec<NormalizationMap>>,
}
