//! CSV and JSONL dataset readers.
//!
//! CSV: a header row naming one column per subtask plus either a `label`
//! column or one `label_<class>` column per class. JSONL: one object per
//! line, `{"scores": {name: value, ...}, "label": 0|1}` or with
//! `"labels": {class: 0|1, ...}` instead of `label`.

use std::path::Path;

use serde_json::Value;
use thresh_core::{Dataset, MultiLabelDataset, ScoreMatrix};

use crate::config::InputFormat;
use crate::error::InputError;

const LABEL: &str = "label";
const LABEL_PREFIX: &str = "label_";

/// A loaded file: one binary label per row, or one label per class.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Single(Dataset),
    Multi(MultiLabelDataset),
}

impl Loaded {
    pub fn names(&self) -> &[String] {
        match self {
            Loaded::Single(d) => d.subtask_names(),
            Loaded::Multi(d) => d.class_names(),
        }
    }
}

pub fn load_dataset(path: &Path, format: InputFormat) -> Result<Loaded, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    match format {
        InputFormat::Csv => parse_csv(&text),
        InputFormat::Jsonl => parse_jsonl(&text),
    }
}

fn parse_score(line: u64, column: &str, raw: &str) -> Result<f64, InputError> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| InputError::NonNumericScore {
            line,
            column: column.to_string(),
            value: raw.to_string(),
        })?;
    check_score(line, column, value)
}

fn check_score(line: u64, column: &str, value: f64) -> Result<f64, InputError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(InputError::ScoreOutOfRange {
            line,
            column: column.to_string(),
            value,
        });
    }
    Ok(value)
}

fn parse_label(line: u64, column: &str, raw: &str) -> Result<u8, InputError> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(InputError::ParseError {
            line,
            column: column.to_string(),
            message: format!("label {other:?} is not 0 or 1"),
        }),
    }
}

/// Column layout shared by both formats once the label keys are known.
struct Layout {
    names: Vec<String>,
    /// One label per class, in `names` order.
    multi: bool,
}

fn finish(
    layout: &Layout,
    rows: usize,
    values: Vec<f64>,
    labels: Vec<u8>,
) -> Result<Loaded, InputError> {
    let scores = ScoreMatrix::new(layout.names.clone(), rows, values).map_err(InputError::Data)?;
    if layout.multi {
        Ok(Loaded::Multi(
            MultiLabelDataset::new(scores, &labels).map_err(InputError::Data)?,
        ))
    } else {
        Ok(Loaded::Single(
            Dataset::new(scores, &labels).map_err(InputError::Data)?,
        ))
    }
}

fn parse_csv(text: &str) -> Result<Loaded, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        InputError::ParseError {
            line,
            column: String::new(),
            message: e.to_string(),
        }
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();

    let single = header.iter().position(|h| h == LABEL);
    let class_cols: Vec<(usize, &str)> = header
        .iter()
        .enumerate()
        .filter_map(|(k, h)| h.strip_prefix(LABEL_PREFIX).map(|c| (k, c)))
        .collect();
    let score_cols: Vec<usize> = (0..header.len())
        .filter(|&k| k != single.unwrap_or(usize::MAX) && !class_cols.iter().any(|&(c, _)| c == k))
        .collect();
    let names: Vec<String> = score_cols.iter().map(|&k| header[k].clone()).collect();

    // label column index per score column (multi) or the single label column
    let label_cols: Vec<usize> = match (single, class_cols.is_empty()) {
        (Some(_), false) => return Err(InputError::MixedLabelColumns),
        (Some(k), true) => vec![k],
        (None, true) => {
            return Err(InputError::MissingLabelColumn {
                line: 1,
                expected: LABEL.to_string(),
            })
        }
        (None, false) => {
            let mut cols = Vec::with_capacity(names.len());
            for name in &names {
                let found = class_cols.iter().find(|&&(_, c)| c == name);
                match found {
                    Some(&(k, _)) => cols.push(k),
                    None => {
                        return Err(InputError::MissingLabelColumn {
                            line: 1,
                            expected: format!("{LABEL_PREFIX}{name}"),
                        })
                    }
                }
            }
            if let Some(&(_, orphan)) = class_cols
                .iter()
                .find(|&&(_, c)| !names.iter().any(|n| n == c))
            {
                return Err(InputError::InconsistentKeys {
                    line: 1,
                    expected: names.clone(),
                    found: vec![orphan.to_string()],
                });
            }
            cols
        }
    };
    let layout = Layout {
        names,
        multi: single.is_none(),
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        for &k in &score_cols {
            values.push(parse_score(line, &header[k], &record[k])?);
        }
        for &k in &label_cols {
            labels.push(parse_label(line, &header[k], &record[k])?);
        }
        rows += 1;
    }
    finish(&layout, rows, values, labels)
}

fn object_keys(v: &serde_json::Map<String, Value>) -> Vec<String> {
    v.keys().cloned().collect()
}

fn same_keys(a: &[String], b: &[String]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

fn json_label(line: u64, column: &str, v: &Value) -> Result<u8, InputError> {
    match v.as_u64() {
        Some(0) => Ok(0),
        Some(1) => Ok(1),
        _ => Err(InputError::ParseError {
            line,
            column: column.to_string(),
            message: format!("label {v} is not 0 or 1"),
        }),
    }
}

fn parse_jsonl(text: &str) -> Result<Loaded, InputError> {
    let mut layout: Option<Layout> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: Value = serde_json::from_str(raw).map_err(|e| InputError::ParseError {
            line,
            column: e.column().to_string(),
            message: e.to_string(),
        })?;
        let obj = record.as_object().ok_or_else(|| InputError::ParseError {
            line,
            column: "1".into(),
            message: "record is not a JSON object".into(),
        })?;
        let scores = obj
            .get("scores")
            .and_then(Value::as_object)
            .ok_or_else(|| InputError::ParseError {
                line,
                column: "scores".into(),
                message: "missing `scores` object".into(),
            })?;
        let single = obj.get(LABEL);
        let multi = obj.get("labels");
        let is_multi = match (single, multi) {
            (Some(_), Some(_)) => return Err(InputError::MixedLabelColumns),
            (Some(_), None) => false,
            (None, Some(_)) => true,
            (None, None) => {
                return Err(InputError::MissingLabelColumn {
                    line,
                    expected: match &layout {
                        Some(l) if l.multi => "labels".into(),
                        _ => LABEL.into(),
                    },
                })
            }
        };
        let keys = object_keys(scores);
        let layout = layout.get_or_insert_with(|| Layout {
            names: keys.clone(),
            multi: is_multi,
        });
        if layout.multi != is_multi {
            return Err(InputError::MissingLabelColumn {
                line,
                expected: if layout.multi {
                    "labels".into()
                } else {
                    LABEL.into()
                },
            });
        }
        if !same_keys(&keys, &layout.names) {
            return Err(InputError::InconsistentKeys {
                line,
                expected: layout.names.clone(),
                found: keys,
            });
        }
        for name in &layout.names {
            let v = &scores[name.as_str()];
            let score = v.as_f64().ok_or_else(|| InputError::NonNumericScore {
                line,
                column: name.clone(),
                value: v.to_string(),
            })?;
            values.push(check_score(line, name, score)?);
        }
        if is_multi {
            let map = multi
                .and_then(Value::as_object)
                .ok_or_else(|| InputError::ParseError {
                    line,
                    column: "labels".into(),
                    message: "`labels` is not an object".into(),
                })?;
            if !same_keys(&object_keys(map), &layout.names) {
                return Err(InputError::InconsistentKeys {
                    line,
                    expected: layout.names.clone(),
                    found: object_keys(map),
                });
            }
            for name in &layout.names {
                labels.push(json_label(line, name, &map[name.as_str()])?);
            }
        } else {
            labels.push(json_label(line, LABEL, single.unwrap())?);
        }
        rows += 1;
    }
    match layout {
        Some(layout) => finish(&layout, rows, values, labels),
        None => Err(InputError::Data(thresh_core::Error::EmptyDataset)),
    }
}
