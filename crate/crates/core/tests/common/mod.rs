#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution};
use thresh_core::{build_dataset, Dataset, DecisionExpr, MultiLabelDataset, ScoreMatrix};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// Random expression tree over leaves `0..n`, at most `max_depth` levels
/// of operators.
pub fn random_expr(rng: &mut StdRng, n: usize, max_depth: usize) -> DecisionExpr {
    if max_depth == 0 || rng.random_bool(0.3) {
        return DecisionExpr::Leaf(rng.random_range(0..n));
    }
    match rng.random_range(0..3) {
        0 => DecisionExpr::negate(random_expr(rng, n, max_depth - 1)),
        1 => DecisionExpr::and(
            random_expr(rng, n, max_depth - 1),
            random_expr(rng, n, max_depth - 1),
        ),
        _ => DecisionExpr::or(
            random_expr(rng, n, max_depth - 1),
            random_expr(rng, n, max_depth - 1),
        ),
    }
}

pub fn depth(e: &DecisionExpr) -> usize {
    match e {
        DecisionExpr::Leaf(_) => 0,
        DecisionExpr::Not(a) => 1 + depth(a),
        DecisionExpr::And(a, b) | DecisionExpr::Or(a, b) => 1 + depth(a).max(depth(b)),
    }
}

/// Plain recursive boolean evaluation, kept separate from the library.
pub fn truth(e: &DecisionExpr, bits: &[bool]) -> bool {
    match e {
        DecisionExpr::Leaf(i) => bits[*i],
        DecisionExpr::Not(a) => !truth(a, bits),
        DecisionExpr::And(a, b) => truth(a, bits) && truth(b, bits),
        DecisionExpr::Or(a, b) => truth(a, bits) || truth(b, bits),
    }
}

/// Brute-force confusion counts at raw thresholds: (tp, fp, fn, tn).
pub fn brute_counts(
    ds: &Dataset,
    expr: &DecisionExpr,
    thresholds: &[f64],
) -> (usize, usize, usize, usize) {
    let s = ds.scores();
    let mut c = (0, 0, 0, 0);
    for j in 0..ds.n_samples() {
        let bits: Vec<bool> = (0..s.n_cols())
            .map(|i| s.get(j, i) > thresholds[i])
            .collect();
        match (ds.labels()[j], truth(expr, &bits)) {
            (true, true) => c.0 += 1,
            (false, true) => c.1 += 1,
            (true, false) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}

pub fn brute_precision_recall(c: (usize, usize, usize, usize)) -> (f64, f64) {
    let (tp, fp, fn_, _) = c;
    let p = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let r = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    (p, r)
}

fn beta(a: f64, b: f64) -> Beta<f64> {
    Beta::new(a, b).unwrap()
}

/// Two-subtask instance where each column is a beta mixture conditioned on
/// the label: positives lean high, negatives lean low. Column strengths
/// differ so neither threshold is trivially shared.
pub fn beta_mixture(seed: u64, n_samples: usize, positive_rate: f64) -> Dataset {
    let mut r = rng(seed);
    let pos = [beta(6.0, 2.0), beta(4.0, 2.5)];
    let neg = [beta(2.0, 5.0), beta(1.5, 4.0)];
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let y = r.random_bool(positive_rate);
        let dist = if y { &pos } else { &neg };
        rows.push([dist[0].sample(&mut r), dist[1].sample(&mut r)]);
        labels.push(y as u8);
    }
    build_dataset(&["a", "b"], &rows, &labels).unwrap()
}

/// Multi-label instance with per-class signal strengths.
pub fn multilabel(seed: u64, n_samples: usize) -> MultiLabelDataset {
    let mut r = rng(seed);
    let rates = [0.3, 0.45, 0.2];
    let pos = [beta(5.0, 2.0), beta(3.0, 2.0), beta(4.0, 3.0)];
    let neg = [beta(2.0, 4.0), beta(2.0, 2.5), beta(2.0, 3.5)];
    let mut values = Vec::with_capacity(n_samples * 3);
    let mut labels = Vec::with_capacity(n_samples * 3);
    for _ in 0..n_samples {
        for c in 0..3 {
            let y = r.random_bool(rates[c]);
            values.push(if y {
                pos[c].sample(&mut r)
            } else {
                neg[c].sample(&mut r)
            });
            labels.push(y as u8);
        }
    }
    let scores =
        ScoreMatrix::new(vec!["x".into(), "y".into(), "z".into()], n_samples, values).unwrap();
    MultiLabelDataset::new(scores, &labels).unwrap()
}

/// Two heavily skewed columns: `a ~ Beta(0.5, 8)` piles up near 0 and
/// `b ~ Beta(8, 0.5)` near 1. Labels follow an OR of the within-sample
/// percentiles with a soft boundary.
pub fn skewed(seed: u64, n_samples: usize) -> Dataset {
    let mut r = rng(seed);
    let (da, db) = (beta(0.5, 8.0), beta(8.0, 0.5));
    let a: Vec<f64> = (0..n_samples).map(|_| da.sample(&mut r)).collect();
    let b: Vec<f64> = (0..n_samples).map(|_| db.sample(&mut r)).collect();
    let pct =
        |col: &[f64], v: f64| col.iter().filter(|&&x| x <= v).count() as f64 / col.len() as f64;
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let signal = pct(&a, a[j]).max(pct(&b, b[j]));
        let p = 1.0 / (1.0 + (-40.0 * (signal - 0.85)).exp());
        labels.push(r.random_bool(p) as u8);
        rows.push([a[j], b[j]]);
    }
    build_dataset(&["a", "b"], &rows, &labels).unwrap()
}
