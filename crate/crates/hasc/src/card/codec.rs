// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use super::{check_invariants, SystemCard};
use crate::canonical::{to_canonical_bytes, NonCanonicalizable};
use crate::validation::{Finding, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Json,
    Yaml,
}

impl Format {
    /// Picks the format from a file name: `.yaml`/`.yml` are YAML, anything else JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("yaml" | "yml") => Format::Yaml,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum CardError {
    #[error("SYNTAX at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("CONTRACT at `{path}`: {message}")]
    Contract { path: String, message: String },
    #[error("INVARIANT: {}", summarize(.0))]
    Invariant(Vec<Finding>),
    #[error("NONCANONICALIZABLE: {0}")]
    NonCanonicalizable(#[from] NonCanonicalizable),
}

fn summarize(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| format!("{} at `{}`: {}", f.code, f.path, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CardError {
    pub fn code(&self) -> &'static str {
        match self {
            CardError::Syntax { .. } => "SYNTAX",
            CardError::Contract { .. } => "CONTRACT",
            CardError::Invariant(_) => "INVARIANT",
            CardError::NonCanonicalizable(_) => "NONCANONICALIZABLE",
        }
    }
}

fn line_col(text: &[u8], offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, column)
}

/// Decodes `bytes` into a generic JSON tree without applying the card schema.
pub(crate) fn decode_tree(bytes: &[u8], format: Format) -> Result<Value, CardError> {
    if let Err(e) = std::str::from_utf8(bytes) {
        let (line, column) = line_col(bytes, e.valid_up_to());
        return Err(CardError::Syntax {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        });
    }
    match format {
        Format::Json => serde_json::from_slice(bytes).map_err(|e| CardError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }),
        Format::Yaml => {
            let mut doc: serde_yaml::Value = serde_yaml::from_slice(bytes).map_err(|e| {
                let (line, column) = e.location().map_or((0, 0), |l| (l.line(), l.column()));
                CardError::Syntax {
                    line,
                    column,
                    message: e.to_string(),
                }
            })?;
            doc.apply_merge().map_err(|e| CardError::Contract {
                path: String::new(),
                message: e.to_string(),
            })?;
            yaml_to_json(doc, &mut String::new())
        }
    }
}

fn yaml_to_json(v: serde_yaml::Value, path: &mut String) -> Result<Value, CardError> {
    use serde_yaml::Value as Y;
    let contract = |path: &str, message: String| CardError::Contract {
        path: path.to_string(),
        message,
    };
    Ok(match v {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::String(s) => Value::String(s),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                Number::from_f64(f)
                    .map(Value::Number)
                    .ok_or_else(|| contract(path, format!("non-finite number {n} cannot be represented")))?
            }
        }
        Y::Sequence(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.into_iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                out.push(yaml_to_json(item, path)?);
                path.truncate(len);
            }
            Value::Array(out)
        }
        Y::Mapping(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let Y::String(key) = k else {
                    return Err(contract(path, format!("mapping key {k:?} is not a string")));
                };
                let len = path.len();
                if !path.is_empty() {
                    path.push('.');
                }
                path.push_str(&key);
                let v = yaml_to_json(v, path)?;
                path.truncate(len);
                out.insert(key, v);
            }
            Value::Object(out)
        }
        Y::Tagged(t) => {
            return Err(contract(
                path,
                format!("tagged value `{}` (binary or custom types) is not supported", t.tag),
            ))
        }
    })
}

/// Applies the card schema to a JSON tree. Type invariants are not checked.
pub fn from_tree_unchecked(tree: Value) -> Result<SystemCard, CardError> {
    if !tree.is_object() {
        return Err(CardError::Contract {
            path: String::new(),
            message: "card must be a mapping".into(),
        });
    }
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        CardError::Contract {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn from_tree(tree: Value) -> Result<SystemCard, CardError> {
    let card = from_tree_unchecked(tree)?;
    ensure_invariants(card)
}

fn ensure_invariants(card: SystemCard) -> Result<SystemCard, CardError> {
    let errors: Vec<Finding> = check_invariants(&card)
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(card)
    } else {
        Err(CardError::Invariant(errors))
    }
}

/// Parses a card and checks every type invariant.
pub fn parse_card(bytes: &[u8], format: Format) -> Result<SystemCard, CardError> {
    ensure_invariants(parse_card_unchecked(bytes, format)?)
}

/// Parses a card, stopping after syntax and schema checks. Useful when the
/// caller wants to report invariant violations as validation findings.
pub fn parse_card_unchecked(bytes: &[u8], format: Format) -> Result<SystemCard, CardError> {
    from_tree_unchecked(decode_tree(bytes, format)?)
}

pub fn to_tree(card: &SystemCard) -> Value {
    serde_json::to_value(card).expect("card model serializes to JSON")
}

pub fn serialize(card: &SystemCard, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(card).expect("card model serializes to JSON");
            out.push(b'\n');
            out
        }
        Format::Yaml => serde_yaml::to_string(card)
            .expect("card model serializes to YAML")
            .into_bytes(),
    }
}

pub fn canonicalize(card: &SystemCard) -> Result<Vec<u8>, CardError> {
    Ok(to_canonical_bytes(&to_tree(card))?)
}
