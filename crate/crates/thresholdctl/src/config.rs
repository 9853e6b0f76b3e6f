//! Run configuration: a TOML file and command-line flags share the same
//! keys, with flags taking precedence.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Trusthresh,
    Sglthresh,
    Greedy,
    Default,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Trusthresh => "trusthresh",
            Method::Sglthresh => "sglthresh",
            Method::Greedy => "greedy",
            Method::Default => "default",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[value(name = "recall_at_precision")]
    RecallAtPrecision,
    #[value(name = "micro_f1")]
    MicroF1,
}

impl From<ObjectiveName> for thresh_core::Objective {
    fn from(o: ObjectiveName) -> Self {
        match o {
            ObjectiveName::RecallAtPrecision => thresh_core::Objective::RecallAtPrecision,
            ObjectiveName::MicroF1 => thresh_core::Objective::MicroF1,
        }
    }
}

/// Built-in expressions over every subtask column in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    OrChain,
    NotAndChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRuleName {
    Adam,
    #[value(name = "gradient_descent")]
    GradientDescent,
}

impl From<UpdateRuleName> for thresh_core::UpdateRule {
    fn from(u: UpdateRuleName) -> Self {
        match u {
            UpdateRuleName::Adam => thresh_core::UpdateRule::default(),
            UpdateRuleName::GradientDescent => thresh_core::UpdateRule::GradientDescent,
        }
    }
}

/// Every setting is optional so that a file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    pub input_format: Option<InputFormat>,
    pub expression: Option<String>,
    pub expression_file: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub method: Option<Method>,
    pub methods: Option<Vec<Method>>,
    pub objective: Option<ObjectiveName>,
    pub target_precision: Option<f64>,
    pub targets: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub learning_rate: Option<f64>,
    pub iterations: Option<usize>,
    pub tau_init: Option<f64>,
    pub width_init: Option<f64>,
    pub sigma_init: Option<f64>,
    pub normalize_scores: Option<bool>,
    pub learn_widths: Option<bool>,
    pub update_rule: Option<UpdateRuleName>,
    pub grid_size: Option<usize>,
    pub max_sweeps: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub trace: Option<bool>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Values set in `top` win over values in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay_fields!(base, top;
            input_path, input_format, expression, expression_file, preset, method, methods,
            objective, target_precision, targets, alpha, learning_rate, iterations, tau_init,
            width_init, sigma_init, normalize_scores, learn_widths, update_rule, grid_size,
            max_sweeps, output_path, trace)
    }

    pub fn objective(&self) -> ObjectiveName {
        self.objective.unwrap_or(ObjectiveName::RecallAtPrecision)
    }

    pub fn method(&self) -> Method {
        self.method.unwrap_or(Method::Trusthresh)
    }

    /// Penalty weight when none is given.
    pub const DEFAULT_ALPHA: f64 = 32.0;

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(Self::DEFAULT_ALPHA)
    }

    pub fn input_path(&self) -> Result<&Path, CliError> {
        self.input_path
            .as_deref()
            .ok_or_else(|| CliError::config("no input file given"))
    }

    /// Explicit format, else `.jsonl`/`.json`/`.ndjson` extensions mean JSONL.
    pub fn input_format(&self) -> Result<InputFormat, CliError> {
        if let Some(f) = self.input_format {
            return Ok(f);
        }
        let ext = self
            .input_path()?
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        Ok(match ext.as_str() {
            "jsonl" | "json" | "ndjson" => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        })
    }

    /// Checks that the objective-dependent keys are coherent: micro-F1 runs
    /// take no expression or target; recall-at-precision runs need both.
    pub fn check_objective(&self, targets_allowed: bool) -> Result<(), CliError> {
        let expr_sources = [
            self.expression.is_some(),
            self.expression_file.is_some(),
            self.preset.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        let has_target = self.target_precision.is_some() || self.targets.is_some();
        match self.objective() {
            ObjectiveName::MicroF1 => {
                if expr_sources > 0 {
                    return Err(CliError::config("micro_f1 does not take an expression"));
                }
                if has_target {
                    return Err(CliError::config(
                        "micro_f1 does not take a target precision",
                    ));
                }
            }
            ObjectiveName::RecallAtPrecision => {
                if expr_sources != 1 {
                    return Err(CliError::config(
                        "recall_at_precision needs exactly one of expression, expression_file, preset",
                    ));
                }
                if !has_target {
                    return Err(CliError::config(
                        "recall_at_precision needs target_precision",
                    ));
                }
                if self.targets.is_some() && !targets_allowed {
                    return Err(CliError::config("targets is only used by compare"));
                }
            }
        }
        Ok(())
    }

    /// Targets for a comparison: `targets` if given, else the single
    /// `target_precision`.
    pub fn target_list(&self) -> Vec<f64> {
        match (&self.targets, self.target_precision) {
            (Some(t), _) => t.clone(),
            (None, Some(t)) => vec![t],
            (None, None) => Vec::new(),
        }
    }

    /// Expression source text, read from disk for `expression_file`.
    pub fn expression_text(&self) -> Result<Option<String>, CliError> {
        if let Some(e) = &self.expression {
            return Ok(Some(e.clone()));
        }
        if let Some(p) = &self.expression_file {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::config(format!("cannot read expression file {}: {e}", p.display()))
            })?;
            return Ok(Some(text));
        }
        Ok(None)
    }
}
