// SPDX-License-Identifier: Apache-2.0

//! The hazard-aware system card document model.
//!
//! A [`SystemCard`] is a plain value: parse it with [`parse_card`], write it
//! with [`serialize`], and derive digests from [`canonicalize`]. Top-level
//! keys the model does not know are kept in [`SystemCard::extras`] so that
//! vendor extensions survive a round trip.

mod codec;
mod hex;
mod invariants;
mod redact;
mod version;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

pub(crate) use codec::decode_tree;
pub use codec::{
    canonicalize, from_tree, from_tree_unchecked, parse_card, parse_card_unchecked, serialize, to_tree, CardError,
    Format,
};
pub use hex::{export_hex, HexStatement, HexStatus};
pub use invariants::check_invariants;
pub use redact::{redact_public, redaction_count, RedactionError, REDACTION_NOTICE_KEY};
pub use version::{CardVersion, VersionError};

use crate::ids::HazardId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemCard {
    pub card_id: String,
    pub version: CardVersion,
    pub published: NaiveDate,
    pub blueprint: SystemBlueprint,
    pub intent: IntentScope,
    #[serde(default)]
    pub provenance: Vec<ProvenanceRecord>,
    #[serde(default)]
    pub evaluations: Vec<EvaluationResult>,
    #[serde(default)]
    pub limitations: Vec<Limitation>,
    #[serde(default)]
    pub hazard_log: Vec<HazardEntry>,
    /// Set when hazard analysis was performed and found nothing.
    #[serde(default, skip_serializing_if = "is_false")]
    pub none_identified: bool,
    #[serde(default)]
    pub guardrails: Vec<Guardrail>,
    #[serde(default)]
    pub remediations: Vec<RemediationEntry>,
    /// Public document listing fixed issues, when the card does not carry them inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remediation_link: Option<String>,
    #[serde(default)]
    pub history: Vec<VersionHistoryEntry>,
    pub governance: GovernanceContacts,
    #[serde(default)]
    pub optional_components: OptionalComponents,
    #[serde(default)]
    pub references: Vec<Reference>,
    #[serde(default)]
    pub visibility_marks: BTreeMap<String, Visibility>,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl SystemCard {
    pub fn hazard(&self, id: &HazardId) -> Option<&HazardEntry> {
        self.hazard_log.iter().find(|h| &h.id == id)
    }

    pub fn guardrail(&self, name: &str) -> Option<&Guardrail> {
        self.guardrails.iter().find(|g| g.name == name)
    }

    /// History entries sorted newest first.
    pub fn history_newest_first(&self) -> Vec<&VersionHistoryEntry> {
        let mut v: Vec<_> = self.history.iter().collect();
        v.sort_by_key(|e| std::cmp::Reverse(e.version));
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlueprint {
    #[serde(default)]
    pub architecture_summary: String,
    #[serde(default)]
    pub components: Vec<Component>,
    #[serde(default)]
    pub data_flows: Vec<DataFlow>,
    #[serde(default)]
    pub models: Vec<ModelRef>,
    /// System prompt documentation, inline text or a URL.
    #[serde(default)]
    pub system_prompt_doc: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Model,
    GuardrailModel,
    Datastore,
    Connector,
    Gateway,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
    #[serde(default)]
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFlow {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub sbom_link: String,
    #[serde(default)]
    pub provenance_link: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentScope {
    #[serde(default)]
    pub intended_users: Vec<String>,
    #[serde(default)]
    pub intended_uses: Vec<String>,
    #[serde(default)]
    pub prohibited_uses: Vec<String>,
    #[serde(default)]
    pub operational_boundaries: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRecord {
    pub source: String,
    pub acquired: DateTime<FixedOffset>,
    pub actor: String,
    #[serde(default)]
    pub transformation: String,
    pub content_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationResult {
    pub name: String,
    pub metric: String,
    /// Measured value as written by the producer; numbers are kept as text.
    #[serde(deserialize_with = "string_or_number")]
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<String>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match Value::deserialize(d)? {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "expected string or number, found {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limitation {
    pub category: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardCategory {
    Security,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardStatus {
    Open,
    Mitigated,
    Remediated,
    Accepted,
}

impl HazardStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HazardStatus::Open => "open",
            HazardStatus::Mitigated => "mitigated",
            HazardStatus::Remediated => "remediated",
            HazardStatus::Accepted => "accepted",
        }
    }
}

/// Probability in `[0, 1]` written as a decimal string with at most four
/// fractional digits, e.g. `"0.035"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(String);

impl Probability {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Probability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("probability `{s}` must be a decimal in [0, 1] with at most 4 fractional digits");
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if s.ends_with('.') || frac.len() > 4 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match int {
            "0" => {}
            "1" if frac.bytes().all(|b| b == b'0') => {}
            _ => return Err(bad()),
        }
        Ok(Probability(s.to_string()))
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardEntry {
    pub id: HazardId,
    pub title: String,
    pub category: HazardCategory,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_score: Option<Probability>,
    /// Input class the score is conditioned on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_context: Option<String>,
    pub status: HazardStatus,
    /// Names of guardrails that mitigate this hazard.
    #[serde(default)]
    pub mitigations: Vec<String>,
    pub discovered: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident_link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hex: Option<HexStatement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Guardrail {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub mechanism: String,
    #[serde(default)]
    pub covers: Vec<HazardId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemediationEntry {
    pub id: HazardId,
    pub fixed_in: CardVersion,
    #[serde(default)]
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeType {
    Major,
    Minor,
}

impl ChangeType {
    pub fn title(self) -> &'static str {
        match self {
            ChangeType::Major => "Major",
            ChangeType::Minor => "Minor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VersionHistoryEntry {
    pub version: CardVersion,
    pub published: NaiveDate,
    pub change_type: ChangeType,
    pub change_label: String,
    #[serde(default)]
    pub associated_hazards: Vec<HazardId>,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub affected_components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident_link: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernanceContacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security_contact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_contact: Option<String>,
    #[serde(default)]
    pub owner: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionalComponents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference_engine: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agentic_architecture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hosting_platform: Option<String>,
    #[serde(default)]
    pub oss_components: Vec<OssComponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OssComponent {
    pub name: String,
    #[serde(default)]
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub label: String,
    pub url: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Internal,
    Public,
}
