use std::path::PathBuf;

use thiserror::Error;

/// Problems with the data file itself.
#[derive(Debug, Error, PartialEq)]
pub enum InputError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: u64,
        column: String,
        message: String,
    },
    #[error("line {line}: missing label column `{expected}`")]
    MissingLabelColumn { line: u64, expected: String },
    #[error("line {line}: keys {found:?} differ from the first record's {expected:?}")]
    InconsistentKeys {
        line: u64,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("line {line}, column `{column}`: score {value:?} is not a number")]
    NonNumericScore {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column `{column}`: score {value} is outside [0, 1]")]
    ScoreOutOfRange {
        line: u64,
        column: String,
        value: f64,
    },
    #[error("both `label` and `label_<class>` columns are present")]
    MixedLabelColumns,
    #[error(transparent)]
    Data(thresh_core::Error),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(#[from] InputError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl From<thresh_core::Error> for CliError {
    fn from(e: thresh_core::Error) -> Self {
        use thresh_core::Error as E;
        match e {
            E::Syntax { .. }
            | E::UnknownSubtask(_)
            | E::EmptyExpression
            | E::InvalidConfig(_)
            | E::WidthOutOfRange(_)
            | E::TooManySubtasks { .. } => CliError::Config(e.to_string()),
            E::NonFiniteGradient | E::EmptyMap => CliError::Runtime(e.to_string()),
            _ => CliError::Input(InputError::Data(e)),
        }
    }
}
