use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors produced by the threshold optimization core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Score matrix or label vector dimensions disagree.
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// A score lies outside `[0, 1]` (or is not finite).
    ScoreOutOfRange {
        row: usize,
        col: usize,
        value: f64,
    },
    DuplicateSubtaskName(String),
    /// Subtask name does not match `[A-Za-z_][A-Za-z0-9_]*`.
    InvalidSubtaskName(String),
    EmptyDataset,
    /// Expression text could not be parsed.
    Syntax {
        position: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    UnknownSubtask(String),
    EmptyExpression,
    EmptyMap,
    LengthMismatch {
        left: usize,
        right: usize,
    },
    /// A label other than 0 or 1.
    InvalidLabel {
        row: usize,
        value: u8,
    },
    WidthOutOfRange(f64),
    NonFiniteGradient,
    /// Recall-at-precision fitting needs at least one positive and one negative label.
    DegenerateLabels {
        positives: usize,
        negatives: usize,
    },
    TooManySubtasks {
        found: usize,
        max: usize,
    },
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::ScoreOutOfRange { row, col, value } => write!(
                f,
                "score {value} at sample {row}, subtask {col} is outside [0, 1]"
            ),
            Error::DuplicateSubtaskName(name) => write!(f, "duplicate subtask name `{name}`"),
            Error::InvalidSubtaskName(name) => write!(f, "invalid subtask name `{name}`"),
            Error::EmptyDataset => f.write_str("dataset has no samples or no subtasks"),
            Error::Syntax {
                position,
                expected,
                found,
            } => {
                write!(f, "syntax error at offset {position}: found {found}, expected ")?;
                for (k, e) in expected.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" | ")?;
                    }
                    f.write_str(e)?;
                }
                Ok(())
            }
            Error::UnknownSubtask(name) => write!(f, "unknown subtask `{name}`"),
            Error::EmptyExpression => f.write_str("empty decision expression"),
            Error::EmptyMap => f.write_str("normalization map has no knots"),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::InvalidLabel { row, value } => {
                write!(f, "label {value} at sample {row} is not 0 or 1")
            }
            Error::WidthOutOfRange(w) => write!(f, "width {w} is outside (0, 1)"),
            Error::NonFiniteGradient => f.write_str("gradient is not finite"),
            Error::DegenerateLabels {
                positives,
                negatives,
            } => write!(
                f,
                "need at least one positive and one negative label (got {positives} positive, {negatives} negative)"
            ),
            Error::TooManySubtasks { found, max } => {
                write!(f, "grid oracle supports at most {max} subtasks, got {found}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
