//! Hard-prediction metrics and the partial derivatives of their smooth
//! counterparts with respect to the prediction vector.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Stabilizer added to metric denominators in the gradient formulas only.
pub const PARTIAL_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// `1.0` when nothing is predicted positive.
    pub precision: f64,
    /// `0.0` when there are no positive labels (see `degenerate_recall`).
    pub recall: f64,
    pub f1: f64,
    pub degenerate_recall: bool,
}

impl MetricReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let degenerate_recall = tp + fn_ == 0;
        let recall = if degenerate_recall {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1_denom = 2 * tp + fp + fn_;
        let f1 = if f1_denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / f1_denom as f64
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            degenerate_recall,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Confusion-matrix metrics for binary labels and predictions.
pub fn compute_metrics(labels: &[bool], predictions: &[bool]) -> Result<MetricReport> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: predictions.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(MetricReport::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Recall,
    Precision,
    MicroF1,
}

/// Sufficient statistics of a (possibly soft) prediction vector:
/// `s = sum y*p`, `p = sum y`, `q = sum p`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SoftCounts {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl SoftCounts {
    pub fn from_predictions(labels: &[bool], predictions: &[f64]) -> Self {
        let mut c = SoftCounts::default();
        for (&y, &yh) in labels.iter().zip(predictions) {
            c.push(y, yh);
        }
        c
    }

    #[inline]
    pub fn push(&mut self, label: bool, prediction: f64) {
        if label {
            self.s += prediction;
            self.p += 1.0;
        }
        self.q += prediction;
    }

    /// Smooth metric value with the same stabilized denominators as the
    /// partials, so the two stay mutually consistent.
    pub fn smooth_value(&self, which: MetricKind) -> f64 {
        let eps = PARTIAL_EPSILON;
        match which {
            MetricKind::Recall => self.s / (self.p + eps),
            MetricKind::Precision => self.s / (self.q + eps),
            MetricKind::MicroF1 => 2.0 * self.s / (self.p + self.q + eps),
        }
    }

    /// `d metric / d prediction_j` for a sample with label 0 and label 1.
    pub fn partial_coefficients(&self, which: MetricKind) -> [f64; 2] {
        let eps = PARTIAL_EPSILON;
        let SoftCounts { s, p, q } = *self;
        match which {
            MetricKind::Recall => [0.0, 1.0 / (p + eps)],
            MetricKind::Precision => {
                let d = q + eps;
                [-s / (d * d), (d - s) / (d * d)]
            }
            MetricKind::MicroF1 => {
                let d = p + q + eps;
                [-2.0 * s / (d * d), (2.0 * d - 2.0 * s) / (d * d)]
            }
        }
    }
}

/// Gradient of the chosen smooth metric with respect to each prediction.
pub fn metric_partials(
    labels: &[bool],
    soft_predictions: &[f64],
    which: MetricKind,
) -> Result<Vec<f64>> {
    if labels.len() != soft_predictions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: soft_predictions.len(),
        });
    }
    let coeff = SoftCounts::from_predictions(labels, soft_predictions).partial_coefficients(which);
    Ok(labels.iter().map(|&y| coeff[y as usize]).collect())
}
