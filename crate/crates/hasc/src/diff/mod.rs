// SPDX-License-Identifier: Apache-2.0

//! Structural diffs between card versions and changelog generation.
//!
//! Diffs are computed on canonical trees. Lists whose elements have a stable
//! identity are matched by key (`hazard_log` by `id`; `guardrails`,
//! `blueprint.components` and `blueprint.models` by `name`); other lists are
//! compared position by position.

mod changelog;
mod patch;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use changelog::{affected_components, classify_change, make_changelog_entry, ChangeClass};
pub use patch::{apply_diff, PatchError};

use crate::card::{to_tree, CardVersion, SystemCard};
use crate::ids::HazardId;
use crate::path::{FieldPath, Segment};

/// Lists diffed by element identity, and the identifying field.
pub const KEYED_LISTS: &[(&str, &str)] = &[
    ("hazard_log", "id"),
    ("guardrails", "name"),
    ("blueprint.components", "name"),
    ("blueprint.models", "name"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("CARD_ID_MISMATCH: `{old}` vs `{new}`")]
    CardIdMismatch { old: String, new: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Addition {
    pub path: FieldPath,
    pub value: Value,
    /// Final position in the new list, for elements of keyed lists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub path: FieldPath,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub path: FieldPath,
    pub old: Value,
    pub new: Value,
}

/// A versioned item whose version differs between the two cards. A missing
/// side means the item was added or removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionChange {
    pub name: String,
    pub old_version: Option<String>,
    pub new_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardDiff {
    pub card_id: String,
    pub old_version: Option<CardVersion>,
    pub new_version: CardVersion,
    /// No predecessor: this diff describes an initial release.
    pub initial: bool,
    pub added: Vec<Addition>,
    pub removed: Vec<Removal>,
    pub changed: Vec<Change>,
    pub hazards_added: Vec<HazardId>,
    pub hazards_removed: Vec<HazardId>,
    pub guardrail_changes: Vec<VersionChange>,
    pub model_changes: Vec<VersionChange>,
}

impl CardDiff {
    /// True when no path differs.
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }

    /// Every path touched by the diff.
    pub fn paths(&self) -> impl Iterator<Item = &FieldPath> {
        self.added
            .iter()
            .map(|a| &a.path)
            .chain(self.removed.iter().map(|r| &r.path))
            .chain(self.changed.iter().map(|c| &c.path))
    }
}

pub fn diff_cards(old: &SystemCard, new: &SystemCard) -> Result<CardDiff, DiffError> {
    if old.card_id != new.card_id {
        return Err(DiffError::CardIdMismatch {
            old: old.card_id.clone(),
            new: new.card_id.clone(),
        });
    }
    let mut d = TreeDiff::default();
    d.walk(&to_tree(old), &to_tree(new), &FieldPath::root());
    Ok(CardDiff {
        card_id: new.card_id.clone(),
        old_version: Some(old.version),
        new_version: new.version,
        initial: false,
        added: d.added,
        removed: d.removed,
        changed: d.changed,
        hazards_added: new
            .hazard_log
            .iter()
            .filter(|h| old.hazard(&h.id).is_none())
            .map(|h| h.id.clone())
            .collect(),
        hazards_removed: old
            .hazard_log
            .iter()
            .filter(|h| new.hazard(&h.id).is_none())
            .map(|h| h.id.clone())
            .collect(),
        guardrail_changes: version_changes(
            old.guardrails.iter().map(|g| (g.name.as_str(), g.version.as_str())),
            new.guardrails.iter().map(|g| (g.name.as_str(), g.version.as_str())),
        ),
        model_changes: version_changes(
            old.blueprint
                .models
                .iter()
                .map(|m| (m.name.as_str(), m.version.as_str())),
            new.blueprint
                .models
                .iter()
                .map(|m| (m.name.as_str(), m.version.as_str())),
        ),
    })
}

/// Describes a first release: everything in the card counts as added.
pub fn initial_diff(card: &SystemCard) -> CardDiff {
    let tree = to_tree(card);
    let added = tree
        .as_object()
        .expect("card tree is an object")
        .iter()
        .map(|(k, v)| Addition {
            path: FieldPath::root().key(k.clone()),
            value: v.clone(),
            at: None,
        })
        .collect();
    CardDiff {
        card_id: card.card_id.clone(),
        old_version: None,
        new_version: card.version,
        initial: true,
        added,
        removed: Vec::new(),
        changed: Vec::new(),
        hazards_added: Vec::new(),
        hazards_removed: Vec::new(),
        guardrail_changes: Vec::new(),
        model_changes: Vec::new(),
    }
}

fn version_changes<'a>(
    old: impl Iterator<Item = (&'a str, &'a str)>,
    new: impl Iterator<Item = (&'a str, &'a str)>,
) -> Vec<VersionChange> {
    let old: Vec<_> = old.collect();
    let new: Vec<_> = new.collect();
    let old_map: HashMap<_, _> = old.iter().copied().collect();
    let new_map: HashMap<_, _> = new.iter().copied().collect();
    let mut out = Vec::new();
    for (name, v) in &new {
        let prior = old_map.get(name).copied();
        if prior != Some(*v) {
            out.push(VersionChange {
                name: name.to_string(),
                old_version: prior.map(str::to_string),
                new_version: Some(v.to_string()),
            });
        }
    }
    for (name, v) in &old {
        if !new_map.contains_key(name) {
            out.push(VersionChange {
                name: name.to_string(),
                old_version: Some(v.to_string()),
                new_version: None,
            });
        }
    }
    out
}

#[derive(Default)]
struct TreeDiff {
    added: Vec<Addition>,
    removed: Vec<Removal>,
    changed: Vec<Change>,
}

fn list_key(path: &FieldPath) -> Option<&'static str> {
    let rendered = path.to_string();
    KEYED_LISTS.iter().find(|(p, _)| *p == rendered).map(|(_, k)| *k)
}

/// Keys of a keyed list, if every element carries a unique string key.
fn element_keys<'a>(items: &'a [Value], field: &str) -> Option<Vec<&'a str>> {
    let keys: Vec<&str> = items
        .iter()
        .map(|v| v.get(field).and_then(Value::as_str))
        .collect::<Option<_>>()?;
    let unique: BTreeSet<_> = keys.iter().collect();
    (unique.len() == keys.len()).then_some(keys)
}

/// Longest common subsequence of two key sequences.
fn lcs<'a>(a: &[&'a str], b: &[&'a str]) -> BTreeSet<&'a str> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if a[i] == b[j] {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j, mut out) = (0, 0, BTreeSet::new());
    while i < n && j < m {
        if a[i] == b[j] {
            out.insert(a[i]);
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

impl TreeDiff {
    fn walk(&mut self, old: &Value, new: &Value, path: &FieldPath) {
        match (old, new) {
            (Value::Object(a), Value::Object(b)) => {
                let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
                for k in keys {
                    let child = path.key(k.clone());
                    match (a.get(k), b.get(k)) {
                        (Some(x), Some(y)) => self.walk(x, y, &child),
                        (Some(x), None) => self.removed.push(Removal {
                            path: child,
                            value: x.clone(),
                        }),
                        (None, Some(y)) => self.added.push(Addition {
                            path: child,
                            value: y.clone(),
                            at: None,
                        }),
                        (None, None) => unreachable!(),
                    }
                }
            }
            (Value::Array(a), Value::Array(b)) => {
                let keyed =
                    list_key(path).and_then(|field| Some((field, element_keys(a, field)?, element_keys(b, field)?)));
                match keyed {
                    Some((field, ka, kb)) => self.keyed(a, b, &ka, &kb, field, path),
                    None => self.positional(a, b, path),
                }
            }
            (x, y) if x != y => self.changed.push(Change {
                path: path.clone(),
                old: x.clone(),
                new: y.clone(),
            }),
            _ => {}
        }
    }

    fn positional(&mut self, a: &[Value], b: &[Value], path: &FieldPath) {
        let common = a.len().min(b.len());
        for i in 0..common {
            self.walk(&a[i], &b[i], &path.index(i));
        }
        for (i, v) in a.iter().enumerate().skip(common) {
            self.removed.push(Removal {
                path: path.index(i),
                value: v.clone(),
            });
        }
        for (i, v) in b.iter().enumerate().skip(common) {
            self.added.push(Addition {
                path: path.index(i),
                value: v.clone(),
                at: None,
            });
        }
    }

    /// Elements kept in relative order are diffed in place; everything else
    /// (new, deleted, or moved) becomes a removal and/or an insertion at its
    /// final position.
    fn keyed(&mut self, a: &[Value], b: &[Value], ka: &[&str], kb: &[&str], field: &str, path: &FieldPath) {
        let stay = lcs(ka, kb);
        let at = |k: &str| path.matching(field, k);
        for (k, v) in ka.iter().zip(a) {
            if !stay.contains(k) {
                self.removed.push(Removal {
                    path: at(k),
                    value: v.clone(),
                });
            }
        }
        let old_by_key: HashMap<&str, &Value> = ka.iter().copied().zip(a).collect();
        for (pos, (k, v)) in kb.iter().zip(b).enumerate() {
            if stay.contains(k) {
                self.walk(old_by_key[k], v, &at(k));
            } else {
                self.added.push(Addition {
                    path: at(k),
                    value: v.clone(),
                    at: Some(pos),
                });
            }
        }
    }
}

/// Paths that change on every release and carry no functional meaning.
pub(crate) fn is_bookkeeping(path: &FieldPath) -> bool {
    matches!(
        path.segments().first(),
        Some(Segment::Key(k)) if matches!(k.as_str(), "version" | "published" | "history" | "redaction_notice")
    )
}
