// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde_json::{json, Value};
use thiserror::Error;

use super::codec::{from_tree, to_tree};
use super::{CardError, SystemCard, Visibility};
use crate::path::{FieldPath, Segment};
use crate::validation::{validate_essential, ESSENTIAL_PATHS};

/// Extras key under which the public variant records how many paths were withheld.
pub const REDACTION_NOTICE_KEY: &str = "redaction_notice";

#[derive(Debug, Clone, Error)]
pub enum RedactionError {
    #[error("visibility mark `{0}` is not a valid field path")]
    BadMark(String),
    #[error("visibility mark `{0}` does not resolve in the card")]
    UnresolvedMark(String),
    #[error("REDACTION_BREAKS_ESSENTIAL: removing `{mark}` would delete essential field `{essential}`")]
    BreaksEssential { mark: String, essential: String },
    #[error("redacted card is no longer valid: {0}")]
    BreaksContract(CardError),
}

/// True when removing `mark` would remove the node named by `essential` or
/// one of its ancestors.
fn removes(mark: &FieldPath, essential: &FieldPath) -> bool {
    mark.segments().len() <= essential.segments().len()
        && mark
            .segments()
            .iter()
            .zip(essential.segments())
            .all(|(m, e)| match (m, e) {
                (Segment::Key(a), Segment::Key(b)) => a == b,
                (Segment::Key(_), _) | (_, Segment::Key(_)) => false,
                _ => true,
            })
}

/// Produces the public variant: every path marked internal is removed, the
/// marks themselves are dropped, and the withheld-path count is accumulated
/// under [`REDACTION_NOTICE_KEY`].
pub fn redact_public(card: &SystemCard) -> Result<SystemCard, RedactionError> {
    let mut marks = Vec::new();
    for (key, vis) in &card.visibility_marks {
        if *vis != Visibility::Internal {
            continue;
        }
        let mark: FieldPath = key.parse().map_err(|_| RedactionError::BadMark(key.clone()))?;
        for essential in ESSENTIAL_PATHS {
            let e: FieldPath = essential.parse().expect("essential table paths are valid");
            if removes(&mark, &e) {
                return Err(RedactionError::BreaksEssential {
                    mark: key.clone(),
                    essential: essential.to_string(),
                });
            }
        }
        marks.push((key, mark));
    }

    let mut tree = to_tree(card);
    let mut concrete = BTreeSet::new();
    for (key, mark) in &marks {
        let found = mark.resolve(&tree);
        if found.is_empty() && !mark.is_pattern() {
            return Err(RedactionError::UnresolvedMark((*key).clone()));
        }
        concrete.extend(found);
    }
    // Drop paths whose ancestor is also being removed.
    let roots: Vec<FieldPath> = concrete
        .iter()
        .filter(|p| !concrete.iter().any(|q| q != *p && q.is_prefix_of(p)))
        .cloned()
        .collect();
    // Reverse order removes higher list indices first.
    for p in roots.iter().rev() {
        p.remove(&mut tree);
    }

    let obj = tree.as_object_mut().expect("card tree is an object");
    obj.insert("visibility_marks".into(), json!({}));
    let previous = obj
        .get(REDACTION_NOTICE_KEY)
        .and_then(|n| n.get("removed_paths"))
        .and_then(Value::as_u64)
        .unwrap_or(0);
    obj.insert(
        REDACTION_NOTICE_KEY.into(),
        json!({ "removed_paths": previous + roots.len() as u64 }),
    );

    let public = from_tree(tree).map_err(RedactionError::BreaksContract)?;
    let before = validate_essential(card).findings;
    if let Some(f) = validate_essential(&public)
        .findings
        .into_iter()
        .find(|f| !before.contains(f))
    {
        return Err(RedactionError::BreaksEssential {
            mark: marks.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(", "),
            essential: f.path,
        });
    }
    Ok(public)
}

/// Number of paths withheld from a public variant, if it carries a notice.
pub fn redaction_count(card: &SystemCard) -> Option<u64> {
    card.extras
        .get(REDACTION_NOTICE_KEY)
        .and_then(|n| n.get("removed_paths"))
        .and_then(Value::as_u64)
}
