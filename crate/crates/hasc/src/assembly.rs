// SPDX-License-Identifier: Apache-2.0

//! Build-time card assembly.
//!
//! Each pipeline stage emits a YAML fragment holding part of the card. The
//! fragments are deep-merged in the order given, overlaid on a template's
//! defaults, and checked as a complete card.
//!
//! Merge rules: objects merge key by key, lists concatenate (elements that
//! already appear on the left are not repeated), and two different scalars at
//! the same path are a [`AssemblyError::Conflict`]. There is no
//! last-writer-wins.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::card::{from_tree, serialize, CardError, Format, SystemCard};
use crate::path::FieldPath;

/// Top-level keys of the card namespace. Fragments may also carry `x_`-prefixed
/// vendor extensions.
pub const CARD_FIELDS: &[&str] = &[
    "card_id",
    "version",
    "published",
    "blueprint",
    "intent",
    "provenance",
    "evaluations",
    "limitations",
    "hazard_log",
    "none_identified",
    "guardrails",
    "remediations",
    "remediation_link",
    "history",
    "governance",
    "optional_components",
    "references",
    "visibility_marks",
];

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("EMPTY_INPUT: at least one fragment is required")]
    EmptyInput,
    #[error("CONFLICT at `{path}`: stage `{stage_a}` and stage `{stage_b}` set different values")]
    Conflict {
        path: String,
        stage_a: String,
        stage_b: String,
    },
    #[error("MISSING_PIPELINE_FIELD: {}", .0.join(", "))]
    MissingPipelineField(Vec<String>),
    #[error("stage `{stage}` writes `{key}`, which is not a card field")]
    UnknownField { stage: String, key: String },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("{path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: CardError,
    },
    #[error("IO: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Card(#[from] CardError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fragment {
    pub stage: String,
    pub produced_at: DateTime<FixedOffset>,
    pub payload: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    #[serde(default)]
    pub defaults: Map<String, Value>,
    #[serde(default)]
    pub required_from_pipeline: Vec<FieldPath>,
}

impl Fragment {
    pub fn new(stage: impl Into<String>, produced_at: DateTime<FixedOffset>, payload: Map<String, Value>) -> Self {
        Self {
            stage: stage.into(),
            produced_at,
            payload,
        }
    }

    fn check_namespace(&self) -> Result<(), AssemblyError> {
        check_namespace(&self.stage, &self.payload)
    }
}

fn check_namespace(stage: &str, payload: &Map<String, Value>) -> Result<(), AssemblyError> {
    match payload
        .keys()
        .find(|k| !CARD_FIELDS.contains(&k.as_str()) && !k.starts_with("x_"))
    {
        Some(key) => Err(AssemblyError::UnknownField {
            stage: stage.to_string(),
            key: key.clone(),
        }),
        None => Ok(()),
    }
}

/// `a+b` with duplicate stage names removed, keeping first occurrence.
fn join_stages(a: &str, b: &str) -> String {
    let mut names: Vec<&str> = a.split('+').collect();
    for n in b.split('+') {
        if !names.contains(&n) {
            names.push(n);
        }
    }
    names.join("+")
}

struct Merger<'a> {
    /// Stage that supplied each scalar, keyed by rendered path.
    origins: &'a mut HashMap<String, String>,
    left_stage: &'a str,
    right_stage: &'a str,
}

impl Merger<'_> {
    fn merge(&mut self, left: &mut Value, right: &Value, path: &FieldPath) -> Result<(), AssemblyError> {
        match (left, right) {
            (Value::Object(l), Value::Object(r)) => {
                for (k, rv) in r {
                    let child = path.key(k.clone());
                    match l.get_mut(k) {
                        Some(lv) => self.merge(lv, rv, &child)?,
                        None => {
                            self.record(rv, &child);
                            l.insert(k.clone(), rv.clone());
                        }
                    }
                }
                Ok(())
            }
            (Value::Array(l), Value::Array(r)) => {
                let before = l.len();
                for item in r {
                    if !l[..before].contains(item) {
                        l.push(item.clone());
                    }
                }
                Ok(())
            }
            (l, r) if *l == *r => Ok(()),
            _ => {
                let key = path.to_string();
                Err(AssemblyError::Conflict {
                    stage_a: self
                        .origins
                        .get(&key)
                        .cloned()
                        .unwrap_or_else(|| self.left_stage.to_string()),
                    stage_b: self.right_stage.to_string(),
                    path: key,
                })
            }
        }
    }

    fn record(&mut self, v: &Value, path: &FieldPath) {
        match v {
            Value::Object(m) => {
                for (k, child) in m {
                    self.record(child, &path.key(k.clone()));
                }
            }
            Value::Array(_) => {}
            _ => {
                self.origins.insert(path.to_string(), self.right_stage.to_string());
            }
        }
    }
}

fn merge_with_origins(
    left: &Fragment,
    right: &Fragment,
    origins: &mut HashMap<String, String>,
) -> Result<Fragment, AssemblyError> {
    let mut payload = Value::Object(left.payload.clone());
    Merger {
        origins,
        left_stage: &left.stage,
        right_stage: &right.stage,
    }
    .merge(&mut payload, &Value::Object(right.payload.clone()), &FieldPath::root())?;
    let Value::Object(payload) = payload else {
        unreachable!("merging two objects yields an object")
    };
    Ok(Fragment {
        stage: join_stages(&left.stage, &right.stage),
        produced_at: left.produced_at.max(right.produced_at),
        payload,
    })
}

/// Merges two fragments. Associative on conflict-free inputs and idempotent.
pub fn merge_pair(left: &Fragment, right: &Fragment) -> Result<Fragment, AssemblyError> {
    merge_with_origins(left, right, &mut HashMap::new())
}

pub fn merge_fragments(fragments: &[Fragment]) -> Result<Fragment, AssemblyError> {
    let (first, rest) = fragments.split_first().ok_or(AssemblyError::EmptyInput)?;
    first.check_namespace()?;
    let mut origins = HashMap::new();
    Merger {
        origins: &mut origins,
        left_stage: &first.stage,
        right_stage: &first.stage,
    }
    .record(&Value::Object(first.payload.clone()), &FieldPath::root());
    let mut acc = first.clone();
    for f in rest {
        f.check_namespace()?;
        acc = merge_with_origins(&acc, f, &mut origins)?;
    }
    Ok(acc)
}

fn overlay(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, tv) in t {
                match b.get_mut(k) {
                    Some(bv) => overlay(bv, tv),
                    None => {
                        b.insert(k.clone(), tv.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}

impl Template {
    pub fn check(&self) -> Result<(), AssemblyError> {
        check_namespace("template", &self.defaults)?;
        let defaults = Value::Object(self.defaults.clone());
        if let Some(p) = self.required_from_pipeline.iter().find(|p| p.get(&defaults).is_some()) {
            return Err(AssemblyError::InvalidTemplate(format!(
                "`{p}` is required from the pipeline but also has a default"
            )));
        }
        Ok(())
    }
}

/// Overlays the merged pipeline output on the template defaults (pipeline
/// values win) and parses the result as a card.
pub fn apply_template(merged: &Fragment, template: &Template) -> Result<SystemCard, AssemblyError> {
    template.check()?;
    let payload = Value::Object(merged.payload.clone());
    let missing: Vec<String> = template
        .required_from_pipeline
        .iter()
        .filter(|p| p.get(&payload).is_none())
        .map(ToString::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(AssemblyError::MissingPipelineField(missing));
    }
    let mut tree = Value::Object(template.defaults.clone());
    overlay(&mut tree, &payload);
    Ok(from_tree(tree)?)
}

pub fn load_fragment(path: &Path) -> Result<Fragment, AssemblyError> {
    let bytes = read(path)?;
    let tree = crate::card::decode_tree(&bytes, Format::Yaml).map_err(|source| AssemblyError::Load {
        path: path.to_path_buf(),
        source,
    })?;
    serde_path_to_error::deserialize(tree).map_err(|e| AssemblyError::Load {
        path: path.to_path_buf(),
        source: CardError::Contract {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        },
    })
}

pub fn load_template(path: &Path) -> Result<Template, AssemblyError> {
    let bytes = read(path)?;
    let tree = crate::card::decode_tree(&bytes, Format::from_path(path)).map_err(|source| AssemblyError::Load {
        path: path.to_path_buf(),
        source,
    })?;
    serde_path_to_error::deserialize(tree).map_err(|e| AssemblyError::Load {
        path: path.to_path_buf(),
        source: CardError::Contract {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        },
    })
}

fn read(path: &Path) -> Result<Vec<u8>, AssemblyError> {
    std::fs::read(path).map_err(|source| AssemblyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads fragments and template, merges, applies the template, and
/// serializes the resulting card.
pub fn assemble(
    fragment_paths: &[PathBuf],
    template_path: &Path,
    out_format: Format,
) -> Result<(SystemCard, Vec<u8>), AssemblyError> {
    if fragment_paths.is_empty() {
        return Err(AssemblyError::EmptyInput);
    }
    let template = load_template(template_path)?;
    let fragments = fragment_paths
        .iter()
        .map(|p| load_fragment(p))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = merge_fragments(&fragments)?;
    let card = apply_template(&merged, &template)?;
    let bytes = serialize(&card, out_format);
    Ok((card, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn frag(stage: &str, payload: Value) -> Fragment {
        let Value::Object(m) = payload else { panic!() };
        Fragment::new(stage, "2025-07-22T10:00:00Z".parse().unwrap(), m)
    }

    #[test]
    fn disjoint_union() {
        let a = frag("build", json!({"blueprint": {"architecture_summary": "x"}}));
        let b = frag("qe", json!({"evaluations": [{"name": "e"}]}));
        let m = merge_fragments(&[a, b]).unwrap();
        assert_eq!(m.stage, "build+qe");
        assert_eq!(
            Value::Object(m.payload),
            json!({"blueprint": {"architecture_summary": "x"}, "evaluations": [{"name": "e"}]})
        );
    }

    #[test]
    fn equal_scalars_tolerated() {
        let a = frag("build", json!({"version": "v1.3"}));
        let b = frag("security", json!({"version": "v1.3"}));
        assert!(merge_fragments(&[a, b]).is_ok());
    }

    #[test]
    fn scalar_conflict_names_both_stages() {
        let a = frag("build", json!({"version": "v1.3"}));
        let q = frag("qe", json!({"evaluations": []}));
        let b = frag("security", json!({"version": "v1.2"}));
        match merge_fragments(&[a, q, b]) {
            Err(AssemblyError::Conflict { path, stage_a, stage_b }) => {
                assert_eq!(
                    (path.as_str(), stage_a.as_str(), stage_b.as_str()),
                    ("version", "build", "security")
                );
            }
            other => panic!("expected conflict, got {other:?}"),
        }
    }

    #[test]
    fn lists_concatenate_in_order() {
        let a = frag("a", json!({"hazard_log": [1, 2]}));
        let b = frag("b", json!({"hazard_log": [2, 3]}));
        let m = merge_pair(&a, &b).unwrap();
        assert_eq!(m.payload["hazard_log"], json!([1, 2, 3]));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(merge_fragments(&[]), Err(AssemblyError::EmptyInput)));
        assert!(matches!(
            assemble(&[], Path::new("template.json"), Format::Json),
            Err(AssemblyError::EmptyInput)
        ));
    }

    #[test]
    fn unknown_field_rejected() {
        let a = frag("build", json!({"hazardlog": []}));
        assert!(matches!(merge_fragments(&[a]), Err(AssemblyError::UnknownField { .. })));
    }

    #[test]
    fn missing_pipeline_field() {
        let t = Template {
            defaults: Map::new(),
            required_from_pipeline: vec!["hazard_log".parse().unwrap()],
        };
        let m = frag("build", json!({"version": "v1.0"}));
        match apply_template(&m, &t) {
            Err(AssemblyError::MissingPipelineField(p)) => assert_eq!(p, ["hazard_log"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn template_overlap_rejected() {
        let Value::Object(defaults) = json!({"governance": {"owner": "x"}}) else {
            panic!()
        };
        let t = Template {
            defaults,
            required_from_pipeline: vec!["governance.owner".parse().unwrap()],
        };
        assert!(matches!(t.check(), Err(AssemblyError::InvalidTemplate(_))));
    }

    #[test]
    fn overlay_prefers_pipeline() {
        let mut base = json!({"governance": {"owner": "default", "safety_contact": "a@b.example"}, "references": [1]});
        overlay(
            &mut base,
            &json!({"governance": {"owner": "pipeline"}, "references": [2]}),
        );
        assert_eq!(
            base,
            json!({"governance": {"owner": "pipeline", "safety_contact": "a@b.example"}, "references": [2]})
        );
    }
}
