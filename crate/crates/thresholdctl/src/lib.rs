//! File formats, run configuration and subcommands for `thresholdctl`.

pub mod config;
pub mod error;
pub mod load;
pub mod report;
pub mod run;

pub use config::{InputFormat, Method, ObjectiveName, Preset, RunConfig, UpdateRuleName};
pub use error::{CliError, InputError};
pub use load::{load_dataset, Loaded};
pub use run::{execute, Command, EvalSource, Outcome};
