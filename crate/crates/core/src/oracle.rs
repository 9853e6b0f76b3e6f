//! Exhaustive grid search over raw thresholds for small instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::DecisionExpr;
use crate::metrics::MetricReport;
use crate::model::{Dataset, MultiLabelDataset, Objective, ScoreMatrix};
use crate::optimizer::{evaluate_outputs, hard_counts, identity_outputs};

/// Largest subtask count the oracle accepts.
pub const MAX_ORACLE_SUBTASKS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub thresholds: Vec<f64>,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub feasible: bool,
    pub grid_size: usize,
    pub cells_evaluated: usize,
}

fn oracle_impl(
    scores: &ScoreMatrix,
    labels: &[bool],
    exprs: &[DecisionExpr],
    grid_size: usize,
    target: f64,
    objective: Objective,
) -> Result<OracleResult> {
    let n = scores.n_cols();
    if n > MAX_ORACLE_SUBTASKS {
        return Err(Error::TooManySubtasks {
            found: n,
            max: MAX_ORACLE_SUBTASKS,
        });
    }
    if grid_size < 2 {
        return Err(Error::InvalidConfig("grid size must be at least 2"));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| k as f64 / (grid_size - 1) as f64)
        .collect();
    // validates shapes once; the loop below uses the unchecked evaluator
    evaluate_outputs(scores, labels, exprs, &vec![0.0; n])?;

    let mut index = vec![0usize; n];
    let mut thresholds = vec![grid[0]; n];
    let mut bits = vec![false; n];
    let mut best: Option<(Vec<f64>, MetricReport)> = None;
    let mut cells = 0;
    loop {
        for (t, &k) in thresholds.iter_mut().zip(&index) {
            *t = grid[k];
        }
        let m = hard_counts(scores, labels, exprs, &thresholds, &mut bits);
        cells += 1;
        // lexicographic visiting order + strict improvement = smallest-vector tie-break
        let better = match &best {
            None => true,
            Some((_, b)) => match objective {
                Objective::MicroF1 => m.f1 > b.f1,
                Objective::RecallAtPrecision => {
                    let (fm, fb) = (m.precision >= target, b.precision >= target);
                    match (fm, fb) {
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => m.recall > b.recall,
                        (false, false) => m.precision > b.precision,
                    }
                }
            },
        };
        if better {
            best = Some((thresholds.clone(), m));
        }
        // odometer increment, last coordinate fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                let (thresholds, m) = best.expect("at least one cell");
                let feasible = match objective {
                    Objective::RecallAtPrecision => m.precision >= target,
                    Objective::MicroF1 => true,
                };
                return Ok(OracleResult {
                    thresholds,
                    recall: m.recall,
                    precision: m.precision,
                    f1: m.f1,
                    feasible,
                    grid_size,
                    cells_evaluated: cells,
                });
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < grid_size {
                break;
            }
            index[pos] = 0;
        }
    }
}

/// Best raw-threshold cell of an evenly spaced `grid_size^n` grid.
///
/// For recall at precision: the feasible cell with maximum recall, or the
/// maximum-precision cell when none is feasible. For micro-F1: the
/// F1-maximizing cell. Ties go to the lexicographically smallest threshold
/// vector.
pub fn grid_oracle(
    dataset: &Dataset,
    expr: &DecisionExpr,
    grid_size: usize,
    target_precision: f64,
    objective: Objective,
) -> Result<OracleResult> {
    oracle_impl(
        dataset.scores(),
        dataset.labels(),
        core::slice::from_ref(expr),
        grid_size,
        target_precision,
        objective,
    )
}

/// Micro-F1 grid oracle over per-class thresholds.
pub fn grid_oracle_multilabel(
    dataset: &MultiLabelDataset,
    grid_size: usize,
) -> Result<OracleResult> {
    oracle_impl(
        dataset.scores(),
        dataset.labels(),
        &identity_outputs(dataset.n_classes()),
        grid_size,
        0.0,
        Objective::MicroF1,
    )
}
