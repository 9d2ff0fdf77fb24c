// SPDX-License-Identifier: Apache-2.0

//! Hazard identifiers of the form `<scheme>-<year>-<number>`.
//!
//! `ASH-2025-0023` names an AI safety hazard, `CVE-2024-12345` a security
//! vulnerability. Numbers carry at least four digits; longer numbers are
//! written without leading zeros, so every valid identifier has exactly one
//! textual form.

mod registry;

use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use registry::{load_or_create_registry, load_registry, store_registry, IdRegistry, JournalEntry, RegistryError};

/// Earliest year accepted for any identifier.
pub const MIN_YEAR: u16 = 1999;

const MIN_DIGITS: usize = 4;
const MAX_PREFIX_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Ash,
    Cve,
    Other(String),
}

impl Scheme {
    pub fn prefix(&self) -> &str {
        match self {
            Scheme::Ash => "ASH",
            Scheme::Cve => "CVE",
            Scheme::Other(p) => p,
        }
    }

    fn from_prefix(prefix: &str) -> Scheme {
        match prefix {
            "ASH" => Scheme::Ash,
            "CVE" => Scheme::Cve,
            other => Scheme::Other(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("BAD_FORMAT: `{input}`: {reason}")]
    BadFormat { input: String, reason: String },
    #[error("YEAR_OUT_OF_RANGE: {year} is outside [{min}, {max}]")]
    YearOutOfRange { year: i64, min: u16, max: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HazardId {
    scheme: Scheme,
    year: u16,
    number: u32,
    raw: String,
}

/// Latest year accepted at the current wall-clock time.
pub fn max_year() -> u16 {
    (chrono::Utc::now().year() + 1) as u16
}

impl HazardId {
    /// Builds an identifier, checking the year against `[MIN_YEAR, max_year()]`.
    pub fn new(scheme: Scheme, year: u16, number: u32) -> Result<Self, IdError> {
        Self::with_ceiling(scheme, year, number, max_year())
    }

    pub fn with_ceiling(scheme: Scheme, year: u16, number: u32, ceiling: u16) -> Result<Self, IdError> {
        if !(MIN_YEAR..=ceiling).contains(&year) {
            return Err(IdError::YearOutOfRange {
                year: year.into(),
                min: MIN_YEAR,
                max: ceiling,
            });
        }
        let scheme = Scheme::from_prefix(scheme.prefix());
        let bad = |reason: &str| IdError::BadFormat {
            input: format!("{}-{year}-{number}", scheme.prefix()),
            reason: reason.to_string(),
        };
        if number == 0 {
            return Err(bad("number must be positive"));
        }
        if let Scheme::Other(p) = &scheme {
            check_prefix(p).map_err(bad)?;
        }
        let raw = render(&scheme, year, number);
        Ok(Self {
            scheme,
            year,
            number,
            raw,
        })
    }

    pub fn ash(year: u16, number: u32) -> Result<Self, IdError> {
        Self::new(Scheme::Ash, year, number)
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn number(&self) -> u32 {
        self.number
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }
}

fn render(scheme: &Scheme, year: u16, number: u32) -> String {
    format!("{}-{year:04}-{number:0width$}", scheme.prefix(), width = MIN_DIGITS)
}

fn check_prefix(p: &str) -> Result<(), &'static str> {
    let mut chars = p.chars();
    match chars.next() {
        None => return Err("empty prefix"),
        Some(c) if !c.is_ascii_uppercase() => return Err("prefix must start with an uppercase letter"),
        _ => {}
    }
    if p.len() > MAX_PREFIX_LEN {
        return Err("prefix too long");
    }
    if !chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
        return Err("prefix may contain only uppercase letters and digits");
    }
    Ok(())
}

/// Parses `text` as a hazard identifier, accepting years up to `ceiling`.
pub fn parse_hazard_id_with_ceiling(text: &str, ceiling: u16) -> Result<HazardId, IdError> {
    let bad = |reason: &str| IdError::BadFormat {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = text.split('-').collect();
    if parts.len() != 3 {
        return Err(bad("expected exactly three `-`-separated parts"));
    }
    let (prefix, year, number) = (parts[0], parts[1], parts[2]);
    check_prefix(prefix).map_err(&bad)?;

    if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("year must be four digits"));
    }
    let year: u16 = year.parse().map_err(|_| bad("year must be four digits"))?;
    if !(MIN_YEAR..=ceiling).contains(&year) {
        return Err(bad(&format!("year outside [{MIN_YEAR}, {ceiling}]")));
    }

    if number.is_empty() || !number.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("number must be decimal digits"));
    }
    if number.len() < MIN_DIGITS {
        return Err(bad("number must have at least four digits"));
    }
    if number.len() > MIN_DIGITS && number.starts_with('0') {
        return Err(bad("numbers longer than four digits take no leading zeros"));
    }
    let value: u32 = number.parse().map_err(|_| bad("number too large"))?;
    if value == 0 {
        return Err(bad("number must be positive"));
    }
    Ok(HazardId {
        scheme: Scheme::from_prefix(prefix),
        year,
        number: value,
        raw: text.to_string(),
    })
}

pub fn parse_hazard_id(text: &str) -> Result<HazardId, IdError> {
    parse_hazard_id_with_ceiling(text, max_year())
}

pub fn format_hazard_id(id: &HazardId) -> String {
    render(&id.scheme, id.year, id.number)
}

impl fmt::Display for HazardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for HazardId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hazard_id(s)
    }
}

impl Serialize for HazardId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for HazardId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_hazard_id(&s).map_err(serde::de::Error::custom)
    }
}
