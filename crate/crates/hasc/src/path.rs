// SPDX-License-Identifier: Apache-2.0

//! Field paths into the JSON tree of a card.
//!
//! Syntax: dotted object keys with bracketed list selectors, e.g.
//! `hazard_log[0].incident_link`, `guardrails[name="Medical query safety check"].version`,
//! or the pattern form `hazard_log[*].incident_link`.

use std::fmt;
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Key(String),
    Index(usize),
    /// List element whose string field `field` equals `value`.
    Match {
        field: String,
        value: String,
    },
    /// Every element of a list. Only meaningful in patterns.
    Wildcard,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldPath {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid field path `{path}` at byte {offset}: {reason}")]
pub struct PathError {
    pub path: String,
    pub offset: usize,
    pub reason: &'static str,
}

impl FieldPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn key(&self, key: impl Into<String>) -> Self {
        let mut p = self.clone();
        p.segments.push(Segment::Key(key.into()));
        p
    }

    pub fn index(&self, index: usize) -> Self {
        let mut p = self.clone();
        p.segments.push(Segment::Index(index));
        p
    }

    pub fn matching(&self, field: impl Into<String>, value: impl Into<String>) -> Self {
        let mut p = self.clone();
        p.segments.push(Segment::Match {
            field: field.into(),
            value: value.into(),
        });
        p
    }

    pub fn parent(&self) -> Option<FieldPath> {
        if self.segments.is_empty() {
            return None;
        }
        let mut p = self.clone();
        p.segments.pop();
        Some(p)
    }

    pub fn last(&self) -> Option<&Segment> {
        self.segments.last()
    }

    pub fn is_pattern(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::Wildcard))
    }

    /// True when `self` equals `other` or is one of its ancestors.
    pub fn is_prefix_of(&self, other: &FieldPath) -> bool {
        self.segments.len() <= other.segments.len() && self.segments.iter().zip(&other.segments).all(|(a, b)| a == b)
    }

    /// True when the pattern `self` (possibly containing wildcards) matches a
    /// prefix of, or all of, the concrete path `other`.
    pub fn covers(&self, other: &FieldPath) -> bool {
        self.segments.len() <= other.segments.len()
            && self.segments.iter().zip(&other.segments).all(|(a, b)| match (a, b) {
                (Segment::Wildcard, Segment::Index(_) | Segment::Match { .. }) => true,
                _ => a == b,
            })
    }

    /// Looks up a concrete path.
    pub fn get<'a>(&self, root: &'a Value) -> Option<&'a Value> {
        let mut node = root;
        for seg in &self.segments {
            node = step(node, seg)?;
        }
        Some(node)
    }

    pub fn get_mut<'a>(&self, root: &'a mut Value) -> Option<&'a mut Value> {
        let mut node = root;
        for seg in &self.segments {
            node = step_mut(node, seg)?;
        }
        Some(node)
    }

    /// Expands a pattern against `root`, returning every concrete path it
    /// reaches in document order. Wildcards expand to index segments.
    pub fn resolve(&self, root: &Value) -> Vec<FieldPath> {
        let mut out = Vec::new();
        expand(root, &self.segments, FieldPath::root(), &mut out);
        out
    }

    /// Removes the node at a concrete path. Returns the removed value.
    pub fn remove(&self, root: &mut Value) -> Option<Value> {
        let (last, parent) = self.segments.split_last()?;
        let mut node = root;
        for seg in parent {
            node = step_mut(node, seg)?;
        }
        match (node, last) {
            (Value::Object(map), Segment::Key(k)) => map.remove(k),
            (Value::Array(items), Segment::Index(i)) if *i < items.len() => Some(items.remove(*i)),
            (Value::Array(items), Segment::Match { field, value }) => {
                let pos = items.iter().position(|v| element_matches(v, field, value))?;
                Some(items.remove(pos))
            }
            _ => None,
        }
    }
}

fn element_matches(v: &Value, field: &str, value: &str) -> bool {
    v.get(field).and_then(Value::as_str) == Some(value)
}

fn step<'a>(node: &'a Value, seg: &Segment) -> Option<&'a Value> {
    match (node, seg) {
        (Value::Object(map), Segment::Key(k)) => map.get(k),
        (Value::Array(items), Segment::Index(i)) => items.get(*i),
        (Value::Array(items), Segment::Match { field, value }) => {
            items.iter().find(|v| element_matches(v, field, value))
        }
        _ => None,
    }
}

fn step_mut<'a>(node: &'a mut Value, seg: &Segment) -> Option<&'a mut Value> {
    match (node, seg) {
        (Value::Object(map), Segment::Key(k)) => map.get_mut(k),
        (Value::Array(items), Segment::Index(i)) => items.get_mut(*i),
        (Value::Array(items), Segment::Match { field, value }) => {
            items.iter_mut().find(|v| element_matches(v, field, value))
        }
        _ => None,
    }
}

fn expand(node: &Value, rest: &[Segment], here: FieldPath, out: &mut Vec<FieldPath>) {
    let Some((seg, tail)) = rest.split_first() else {
        out.push(here);
        return;
    };
    match (node, seg) {
        (Value::Array(items), Segment::Wildcard) => {
            for (i, item) in items.iter().enumerate() {
                expand(item, tail, here.index(i), out);
            }
        }
        (Value::Array(items), Segment::Match { field, value }) => {
            if let Some(i) = items.iter().position(|v| element_matches(v, field, value)) {
                expand(&items[i], tail, here.index(i), out);
            }
        }
        _ => {
            if let Some(next) = step(node, seg) {
                let mut p = here;
                p.segments.push(seg.clone());
                expand(next, tail, p, out);
            }
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

impl FromStr for FieldPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |offset, reason| PathError {
            path: s.to_string(),
            offset,
            reason,
        };
        let bytes: Vec<(usize, char)> = s.char_indices().collect();
        let mut segments = Vec::new();
        let mut i = 0;
        let mut expect_key = true;
        while i < bytes.len() {
            let (off, c) = bytes[i];
            if c == '[' {
                if segments.is_empty() {
                    return Err(err(off, "path must start with a key"));
                }
                let close = closing_bracket(&bytes, i + 1).ok_or_else(|| err(off, "unterminated `[`"))?;
                let inner: String = bytes[i + 1..close].iter().map(|&(_, c)| c).collect();
                segments.push(parse_bracket(&inner).map_err(|r| err(off, r))?);
                i = close + 1;
                expect_key = false;
                continue;
            }
            if c == '.' {
                if expect_key {
                    return Err(err(off, "empty key"));
                }
                expect_key = true;
                i += 1;
                continue;
            }
            if !expect_key {
                return Err(err(off, "expected `.` or `[`"));
            }
            let start = i;
            while i < bytes.len() && is_ident_char(bytes[i].1) {
                i += 1;
            }
            if start == i {
                return Err(err(off, "invalid key character"));
            }
            segments.push(Segment::Key(bytes[start..i].iter().map(|&(_, c)| c).collect()));
            expect_key = false;
        }
        if expect_key {
            return Err(err(s.len(), "empty key"));
        }
        Ok(FieldPath { segments })
    }
}

/// Index of the `]` closing a bracket that opens just before `from`,
/// skipping over JSON string literals.
fn closing_bracket(chars: &[(usize, char)], from: usize) -> Option<usize> {
    let mut in_str = false;
    let mut escaped = false;
    for (j, &(_, c)) in chars.iter().enumerate().skip(from) {
        match (in_str, escaped, c) {
            (true, true, _) => escaped = false,
            (true, false, '\\') => escaped = true,
            (true, false, '"') => in_str = false,
            (false, _, '"') => in_str = true,
            (false, _, ']') => return Some(j),
            _ => {}
        }
    }
    None
}

fn parse_bracket(inner: &str) -> Result<Segment, &'static str> {
    if inner == "*" {
        return Ok(Segment::Wildcard);
    }
    if !inner.is_empty() && inner.bytes().all(|b| b.is_ascii_digit()) {
        return inner.parse().map(Segment::Index).map_err(|_| "index too large");
    }
    let (field, value) = inner.split_once('=').ok_or("expected index, `*` or field=\"value\"")?;
    if field.is_empty() || !field.chars().all(is_ident_char) {
        return Err("invalid match field");
    }
    let value: String = serde_json::from_str(value).map_err(|_| "match value must be a quoted string")?;
    Ok(Segment::Match {
        field: field.to_string(),
        value,
    })
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Key(k) if n == 0 => write!(f, "{k}")?,
                Segment::Key(k) => write!(f, ".{k}")?,
                Segment::Index(i) => write!(f, "[{i}]")?,
                Segment::Wildcard => write!(f, "[*]")?,
                Segment::Match { field, value } => {
                    let quoted = serde_json::to_string(value).map_err(|_| fmt::Error)?;
                    write!(f, "[{field}={quoted}]")?
                }
            }
        }
        Ok(())
    }
}

impl serde::Serialize for FieldPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for FieldPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
