// SPDX-License-Identifier: Apache-2.0

//! Hazard-aware system cards for AI products.
//!
//! A card ([`card::SystemCard`]) describes a deployed AI system: its
//! blueprint, intended use, governance contacts, guardrails, and a hazard log
//! keyed by `ASH-YYYY-NNNN` or CVE identifiers. This crate assembles cards
//! from pipeline fragments, validates them, evaluates release-gate policies,
//! diffs versions into changelog entries, renders Markdown and HTML, signs
//! canonical digests with ed25519, and serves or audits cards over HTTP.
//!
//! ```
//! use hasc::card::{parse_card, Format};
//! use hasc::validation::{validate, Level};
//!
//! let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/scenario/card-v1.3.hasc.json");
//! let card = parse_card(&std::fs::read(path).unwrap(), Format::Json).unwrap();
//! assert_eq!(validate(&card).level, Level::Pass);
//! ```

pub mod assembly;
pub mod attest;
pub mod canonical;
pub mod card;
pub mod cli;
pub mod diff;
pub mod distribution;
pub mod ids;
pub mod path;
pub mod policy;
pub mod render;
pub mod validation;
