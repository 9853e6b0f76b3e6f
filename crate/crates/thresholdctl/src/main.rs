use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thresholdctl::run::parse_threshold_list;
use thresholdctl::{
    execute, CliError, Command, EvalSource, InputFormat, Method, ObjectiveName, Preset, RunConfig,
    UpdateRuleName,
};

/// Fit, compare and evaluate per-subtask decision thresholds.
#[derive(Parser)]
#[command(name = "thresholdctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fit thresholds with one method and write a report.
    Fit(RunArgs),
    /// Run several methods across target precisions.
    Compare(RunArgs),
    /// Exhaustive grid search over raw thresholds (at most 3 subtasks).
    Oracle(RunArgs),
    /// Evaluate given thresholds on a data file.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Thresholds as `name=value,name=value`.
        #[arg(long, conflicts_with = "report")]
        thresholds: Option<String>,
        /// Take thresholds (and expression, target) from an earlier report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags (snake_case); flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "input")]
    input_path: Option<PathBuf>,
    #[arg(long = "format", value_enum)]
    input_format: Option<InputFormat>,
    /// Decision expression, e.g. `kids AND (weapon OR violence)`.
    #[arg(long)]
    expression: Option<String>,
    #[arg(long)]
    expression_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Comma-separated method list for `compare`.
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveName>,
    #[arg(long)]
    target_precision: Option<f64>,
    /// Comma-separated target precisions for `compare`.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    tau_init: Option<f64>,
    #[arg(long)]
    width_init: Option<f64>,
    #[arg(long)]
    sigma_init: Option<f64>,
    #[arg(long)]
    normalize_scores: Option<bool>,
    #[arg(long)]
    learn_widths: Option<bool>,
    #[arg(long, value_enum)]
    update_rule: Option<UpdateRuleName>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long = "output")]
    output_path: Option<PathBuf>,
    /// Include per-iteration traces in the report.
    #[arg(long)]
    trace: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            input_path: self.input_path,
            input_format: self.input_format,
            expression: self.expression,
            expression_file: self.expression_file,
            preset: self.preset,
            method: self.method,
            methods: self.methods,
            objective: self.objective,
            target_precision: self.target_precision,
            targets: self.targets,
            alpha: self.alpha,
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            tau_init: self.tau_init,
            width_init: self.width_init,
            sigma_init: self.sigma_init,
            normalize_scores: self.normalize_scores,
            learn_widths: self.learn_widths,
            update_rule: self.update_rule,
            grid_size: self.grid_size,
            max_sweeps: self.max_sweeps,
            output_path: self.output_path,
            trace: self.trace.then_some(true),
        };
        Ok(file.overlay(flags))
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (command, args) = match cli.command {
        Sub::Fit(a) => (Command::Fit, a),
        Sub::Compare(a) => (Command::Compare, a),
        Sub::Oracle(a) => (Command::Oracle, a),
        Sub::Eval {
            run,
            thresholds,
            report,
        } => {
            let source = match (thresholds, report) {
                (Some(t), None) => EvalSource::Thresholds(parse_threshold_list(&t)?),
                (None, Some(r)) => EvalSource::Report(r),
                _ => return Err(CliError::config("eval needs --thresholds or --report")),
            };
            (Command::Eval(source), run)
        }
    };
    let cfg = args.into_config()?;
    let outcome = execute(&command, &cfg)?;
    let mut text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    text.push('\n');
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("thresholdctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
