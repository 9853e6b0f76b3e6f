//! Per-subtask rank normalization and its inverse for thresholds.
//!
//! Each score is replaced by its ascending rank within the column divided by
//! the sample count. Tied scores share their midrank, so equal raw scores
//! always map to equal normalized scores.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Dataset, ScoreMatrix};

/// Offset used for thresholds below the smallest knot.
const BELOW_MIN_OFFSET: f64 = 1.0 / (1u64 << 20) as f64;

/// Monotone map between raw and normalized scores for one subtask column.
///
/// Knot coordinates are strictly increasing in both `raw` and `normalized`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationMap {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    n_samples: usize,
}

impl NormalizationMap {
    /// Builds a map from explicit knots. Both coordinate lists must be
    /// strictly increasing and of equal length.
    pub fn from_knots(raw: Vec<f64>, normalized: Vec<f64>, n_samples: usize) -> Result<Self> {
        if raw.len() != normalized.len() {
            return Err(Error::LengthMismatch {
                left: raw.len(),
                right: normalized.len(),
            });
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&raw) || !increasing(&normalized) {
            return Err(Error::InvalidConfig("knots must be strictly increasing"));
        }
        Ok(Self {
            raw,
            normalized,
            n_samples,
        })
    }

    pub fn raw_knots(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized_knots(&self) -> &[f64] {
        &self.normalized
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// Rank-normalizes one column. Returns the normalized values (in input
/// order) and the knot map.
pub fn rank_normalize_column(column: &[f64]) -> (Vec<f64>, NormalizationMap) {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));

    let mut out = alloc::vec![0.0; n];
    let mut raw = Vec::new();
    let mut normalized = Vec::new();
    let denom = 2.0 * n as f64;
    let mut start = 0;
    while start < n {
        let value = column[order[start]];
        let mut end = start + 1;
        while end < n && column[order[end]] == value {
            end += 1;
        }
        // 1-based ordinal ranks start+1 ..= end share their average.
        let q_hat = (start + 1 + end) as f64 / denom;
        for &j in &order[start..end] {
            out[j] = q_hat;
        }
        raw.push(value);
        normalized.push(q_hat);
        start = end;
    }
    (
        out,
        NormalizationMap {
            raw,
            normalized,
            n_samples: n,
        },
    )
}

/// Rank-normalizes every column of a score matrix.
pub fn rank_normalize_scores(scores: &ScoreMatrix) -> (ScoreMatrix, Vec<NormalizationMap>) {
    let rows = scores.n_rows();
    let cols = scores.n_cols();
    let mut values = alloc::vec![0.0; rows * cols];
    let mut maps = Vec::with_capacity(cols);
    for c in 0..cols {
        let (col, map) = rank_normalize_column(&scores.column(c));
        for (r, v) in col.into_iter().enumerate() {
            values[r * cols + c] = v;
        }
        maps.push(map);
    }
    (
        ScoreMatrix::from_parts(scores.names().to_vec(), rows, values),
        maps,
    )
}

/// Rank-normalizes a dataset's scores; labels are untouched.
pub fn rank_normalize(dataset: &Dataset) -> (Dataset, Vec<NormalizationMap>) {
    let (scores, maps) = rank_normalize_scores(dataset.scores());
    (dataset.with_scores(scores), maps)
}

/// Converts a normalized threshold back to raw-score space.
///
/// For every score `q` of the fitted column, `q > result` exactly when the
/// normalized score of `q` is `> tau_hat`. Between knots the value is
/// linearly interpolated; below the first knot it sits just under the
/// smallest raw score and at or above the last knot it equals the largest.
pub fn denormalize_threshold(tau_hat: f64, map: &NormalizationMap) -> Result<f64> {
    let (raw, norm) = (&map.raw, &map.normalized);
    if raw.is_empty() {
        return Err(Error::EmptyMap);
    }
    // number of knots with normalized value <= tau_hat
    let count = norm.partition_point(|&u| u <= tau_hat);
    if count == 0 {
        return Ok(raw[0] - BELOW_MIN_OFFSET);
    }
    let m = count - 1;
    if m + 1 == raw.len() {
        return Ok(raw[m]);
    }
    let frac = (tau_hat - norm[m]) / (norm[m + 1] - norm[m]);
    let tau = raw[m] + frac * (raw[m + 1] - raw[m]);
    // rounding must not carry the threshold onto or past the next knot
    Ok(if tau >= raw[m + 1] {
        raw[m + 1].next_down().max(raw[m])
    } else if tau < raw[m] {
        raw[m]
    } else {
        tau
    })
}
