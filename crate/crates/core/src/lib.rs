//! Learning per-subtask decision thresholds for boolean combinations of
//! classifier scores.
//!
//! A decision function such as `(a OR b) AND NOT c` combines the thresholded
//! outputs of several scoring models. The forward pass uses the exact step
//! function, and gradients with respect to each threshold flow through a
//! truncated-sine surrogate with a learnable width. The objective is recall
//! at a target precision or micro-F1.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod expr;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod optimizer;
pub mod oracle;
pub mod surrogate;
mod update;

pub use baselines::{
    def_thresh, def_thresh_multilabel, greedy_thresh, greedy_thresh_multilabel, sgl_thresh_fit,
    sgl_thresh_fit_multilabel, GreedyConfig, SglConfig,
};
pub use error::{Error, Result};
pub use expr::{parse_and_bind, CompiledExpr, DecisionExpr};
pub use metrics::{compute_metrics, metric_partials, MetricKind, MetricReport};
pub use model::{
    build_dataset, Dataset, FitConfig, FitResult, MultiLabelDataset, Objective, ScoreMatrix,
    ThresholdState, TraceRecord, UpdateRule,
};
pub use normalize::{denormalize_threshold, rank_normalize, NormalizationMap};
pub use optimizer::{
    backward_pass, evaluate_thresholds, evaluate_thresholds_multilabel, fit, fit_multilabel,
    forward_pass, smoothed_objective, ForwardState, GradientState, SurrogateKind,
};
pub use oracle::{grid_oracle, grid_oracle_multilabel, OracleResult, MAX_ORACLE_SUBTASKS};
pub use surrogate::{hsf, smoothed_hsf, surrogate_grads};
