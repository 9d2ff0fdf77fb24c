// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{client, is_stale};
use crate::card::{parse_card_unchecked, CardVersion, Format};
use crate::validation::{validate, FindingCode, Level};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowStatus {
    Loaded,
    LoadFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingSummary {
    pub level: Level,
    pub errors: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryRow {
    pub source: String,
    pub status: RowStatus,
    pub card_id: Option<String>,
    pub version: Option<CardVersion>,
    pub published: Option<NaiveDate>,
    pub days_since_published: Option<i64>,
    pub stale: bool,
    pub findings: Option<FindingSummary>,
    /// Hazard and guardrail references that resolve to nothing.
    pub missing_references: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryTotals {
    pub rows: usize,
    pub loaded: usize,
    pub load_failed: usize,
    pub stale: usize,
    pub failing: usize,
    pub warning: usize,
    pub missing_references: usize,
    pub cards_with_missing_references: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryReport {
    pub evaluated: NaiveDate,
    pub staleness_days: u32,
    pub rows: Vec<InventoryRow>,
    pub totals: InventoryTotals,
}

fn is_card_file(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    [".hasc.json", ".hasc.yaml", ".hasc.yml"]
        .iter()
        .any(|s| name.ends_with(s))
}

enum Source {
    File(PathBuf),
    Url(String),
    Unreadable(String, String),
}

fn expand(inputs: &[String]) -> Vec<Source> {
    let mut out = Vec::new();
    for input in inputs {
        if input.starts_with("http://") || input.starts_with("https://") {
            out.push(Source::Url(input.clone()));
            continue;
        }
        let path = PathBuf::from(input);
        if !path.is_dir() {
            out.push(Source::File(path));
            continue;
        }
        for entry in walkdir::WalkDir::new(&path).sort_by_file_name() {
            match entry {
                Ok(e) if e.file_type().is_file() && is_card_file(e.path()) => out.push(Source::File(e.into_path())),
                Ok(_) => {}
                Err(e) => {
                    let at = e.path().map_or_else(|| input.clone(), |p| p.display().to_string());
                    out.push(Source::Unreadable(at, e.to_string()));
                }
            }
        }
    }
    out
}

fn failed(source: String, error: String) -> InventoryRow {
    InventoryRow {
        source,
        status: RowStatus::LoadFailed,
        card_id: None,
        version: None,
        published: None,
        days_since_published: None,
        stale: false,
        findings: None,
        missing_references: 0,
        error: Some(error),
    }
}

fn row(
    source: String,
    bytes: Result<Vec<u8>, String>,
    format: Format,
    today: NaiveDate,
    staleness_days: u32,
) -> InventoryRow {
    let card = match bytes.and_then(|b| parse_card_unchecked(&b, format).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return failed(source, e),
    };
    let report = validate(&card);
    InventoryRow {
        source,
        status: RowStatus::Loaded,
        card_id: Some(card.card_id.clone()),
        version: Some(card.version),
        published: Some(card.published),
        days_since_published: Some((today - card.published).num_days()),
        stale: is_stale(card.published, today, staleness_days),
        findings: Some(FindingSummary {
            level: report.level,
            errors: report.errors(),
            warnings: report.warnings(),
        }),
        missing_references: report.count(FindingCode::DanglingHazardRef)
            + report.count(FindingCode::DanglingGuardrailRef),
        error: None,
    }
}

/// Loads and validates every card named by `inputs` (files, directories
/// scanned for `*.hasc.{json,yaml,yml}`, or http(s) URLs). Failures become
/// LOAD_FAILED rows. Rows are sorted by card id, then version, then source;
/// failed rows come last.
pub fn inventory_at(inputs: &[String], staleness_days: u32, today: NaiveDate) -> InventoryReport {
    let mut rows: Vec<InventoryRow> = expand(inputs)
        .into_iter()
        .map(|src| match src {
            Source::File(p) => {
                let bytes = std::fs::read(&p).map_err(|e| e.to_string());
                row(
                    p.display().to_string(),
                    bytes,
                    Format::from_path(&p),
                    today,
                    staleness_days,
                )
            }
            Source::Url(u) => {
                let bytes = client::get_bytes(&u).map_err(|e| e.to_string());
                row(u, bytes, Format::Json, today, staleness_days)
            }
            Source::Unreadable(at, e) => failed(at, e),
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.card_id.is_none(), &a.card_id, a.version, &a.source).cmp(&(
            b.card_id.is_none(),
            &b.card_id,
            b.version,
            &b.source,
        ))
    });

    let mut totals = InventoryTotals {
        rows: rows.len(),
        ..Default::default()
    };
    for r in &rows {
        match r.status {
            RowStatus::Loaded => totals.loaded += 1,
            RowStatus::LoadFailed => totals.load_failed += 1,
        }
        totals.stale += usize::from(r.stale);
        match r.findings.as_ref().map(|f| f.level) {
            Some(Level::Fail) => totals.failing += 1,
            Some(Level::Warn) => totals.warning += 1,
            _ => {}
        }
        totals.missing_references += r.missing_references;
        totals.cards_with_missing_references += usize::from(r.missing_references > 0);
    }
    InventoryReport {
        evaluated: today,
        staleness_days,
        rows,
        totals,
    }
}

pub fn inventory(inputs: &[String], staleness_days: u32) -> InventoryReport {
    inventory_at(inputs, staleness_days, Utc::now().date_naive())
}

impl fmt::Display for InventoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:<8} {:<10} {:>5} {:<6} {:<5} {:>4}",
            "CARD", "VERSION", "PUBLISHED", "AGE", "STALE", "LEVEL", "REFS"
        )?;
        for r in &self.rows {
            if r.status == RowStatus::LoadFailed {
                writeln!(f, "LOAD_FAILED {}: {}", r.source, r.error.as_deref().unwrap_or(""))?;
                continue;
            }
            let level = match r.findings.as_ref().map(|s| s.level) {
                Some(Level::Pass) => "pass",
                Some(Level::Warn) => "warn",
                Some(Level::Fail) => "fail",
                None => "-",
            };
            writeln!(
                f,
                "{:<28} {:<8} {:<10} {:>5} {:<6} {:<5} {:>4}",
                r.card_id.as_deref().unwrap_or("-"),
                r.version.map(|v| v.to_string()).unwrap_or_default(),
                r.published.map(|d| d.to_string()).unwrap_or_default(),
                r.days_since_published.unwrap_or_default(),
                if r.stale { "yes" } else { "no" },
                level,
                r.missing_references,
            )?;
        }
        let t = &self.totals;
        write!(
            f,
            "{} card(s), {} load failure(s), {} stale (> {} days as of {}), {} failing, {} with missing references",
            t.loaded,
            t.load_failed,
            t.stale,
            self.staleness_days,
            self.evaluated,
            t.failing,
            t.cards_with_missing_references
        )
    }
}
