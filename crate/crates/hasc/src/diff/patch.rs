// SPDX-License-Identifier: Apache-2.0

use serde_json::Value;
use thiserror::Error;

use super::CardDiff;
use crate::path::{FieldPath, Segment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("path `{0}` does not exist in the base tree")]
    Missing(FieldPath),
    #[error("cannot insert at `{0}`")]
    BadInsert(FieldPath),
}

/// Applies a diff to the tree it was computed from: removals (deepest and
/// highest-index first), then in-place changes, then insertions in order.
pub fn apply_diff(base: &Value, diff: &CardDiff) -> Result<Value, PatchError> {
    let mut tree = base.clone();
    for r in diff.removed.iter().rev() {
        r.path
            .remove(&mut tree)
            .ok_or_else(|| PatchError::Missing(r.path.clone()))?;
    }
    for c in &diff.changed {
        *c.path
            .get_mut(&mut tree)
            .ok_or_else(|| PatchError::Missing(c.path.clone()))? = c.new.clone();
    }
    for a in &diff.added {
        insert(&mut tree, &a.path, a.value.clone(), a.at)?;
    }
    Ok(tree)
}

fn insert(tree: &mut Value, path: &FieldPath, value: Value, at: Option<usize>) -> Result<(), PatchError> {
    let bad = || PatchError::BadInsert(path.clone());
    let (Some(parent), Some(last)) = (path.parent(), path.last()) else {
        return Err(bad());
    };
    let node = parent
        .get_mut(tree)
        .ok_or_else(|| PatchError::Missing(parent.clone()))?;
    match (node, last) {
        (Value::Object(map), Segment::Key(k)) => {
            map.insert(k.clone(), value);
        }
        (Value::Array(items), Segment::Index(i)) if *i <= items.len() => items.insert(*i, value),
        (Value::Array(items), Segment::Match { .. }) => {
            let i = at.unwrap_or(items.len());
            if i > items.len() {
                return Err(bad());
            }
            items.insert(i, value);
        }
        _ => return Err(bad()),
    }
    Ok(())
}
