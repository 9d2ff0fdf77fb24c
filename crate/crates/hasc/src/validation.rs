// SPDX-License-Identifier: Apache-2.0

//! Card validation: the essential-component contract plus cross-reference
//! and syntax checks, reported as findings rather than errors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::card::{check_invariants, HazardStatus, SystemCard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    EssentialMissing,
    DanglingHazardRef,
    DanglingGuardrailRef,
    DuplicateKey,
    HistoryOrder,
    HistoryHeadMismatch,
    FirstEntryNotMajor,
    PublishedBeforeHistory,
    SchemeMismatch,
    MitigationRequired,
    ProbabilityContextMissing,
    BadVersion,
    RemediationAfterVersion,
    HexFixedWithoutRemediation,
    HexMismatch,
    UndeclaredComponent,
    ModelComponentMismatch,
    EmptyField,
    IntentOverlap,
    ProvenanceChain,
    BadDigest,
    BadContact,
    BadMarkPath,
    NoneIdentifiedConflict,
    BadUrlSyntax,
    BadOptionalComponent,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(s.as_str().unwrap_or("UNKNOWN"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl Finding {
    pub fn error(code: FindingCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn warning(code: FindingCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: Level,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// Sorts findings by path and derives the level from their severities.
    pub fn from_findings(mut findings: Vec<Finding>) -> Self {
        findings.sort_by(|a, b| (&a.path, a.code, &a.message).cmp(&(&b.path, b.code, &b.message)));
        findings.dedup();
        let level = if findings.iter().any(|f| f.severity == Severity::Error) {
            Level::Fail
        } else if findings.is_empty() {
            Level::Pass
        } else {
            Level::Warn
        };
        Self { level, findings }
    }

    pub fn errors(&self) -> usize {
        self.findings.iter().filter(|f| f.severity == Severity::Error).count()
    }

    pub fn warnings(&self) -> usize {
        self.findings.iter().filter(|f| f.severity == Severity::Warning).count()
    }

    pub fn count(&self, code: FindingCode) -> usize {
        self.findings.iter().filter(|f| f.code == code).count()
    }

    pub fn merge(self, other: ValidationReport) -> ValidationReport {
        let mut all = self.findings;
        all.extend(other.findings);
        ValidationReport::from_findings(all)
    }
}

/// Card fields that must always be present for the card to be meaningful.
/// Redaction consults this table before removing anything.
pub const ESSENTIAL_PATHS: &[&str] = &[
    "blueprint",
    "blueprint.architecture_summary",
    "blueprint.models",
    "blueprint.models[*].sbom_link",
    "blueprint.models[*].provenance_link",
    "intent",
    "intent.intended_uses",
    "hazard_log",
    "governance",
    "governance.security_contact",
];

pub fn validate_essential(card: &SystemCard) -> ValidationReport {
    use FindingCode::EssentialMissing as M;
    let mut out = Vec::new();
    let bp = &card.blueprint;
    if bp.architecture_summary.trim().is_empty() {
        out.push(Finding::error(
            M,
            "blueprint.architecture_summary",
            "system architecture overview is missing",
        ));
    }
    if bp.models.is_empty() {
        out.push(Finding::error(M, "blueprint.models", "no core models are listed"));
    }
    for (i, m) in bp.models.iter().enumerate() {
        if m.sbom_link.trim().is_empty() {
            out.push(Finding::error(
                M,
                format!("blueprint.models[{i}].sbom_link"),
                format!("model `{}` has no AI bill of materials link", m.name),
            ));
        }
        if m.provenance_link.trim().is_empty() {
            out.push(Finding::error(
                M,
                format!("blueprint.models[{i}].provenance_link"),
                format!("model `{}` has no data provenance link", m.name),
            ));
        }
    }
    if card.intent.intended_uses.is_empty() {
        out.push(Finding::error(
            M,
            "intent.intended_uses",
            "intended uses are not stated",
        ));
    }
    if card.hazard_log.is_empty() && !card.none_identified {
        out.push(Finding::error(
            M,
            "hazard_log",
            "hazard log is empty; set none_identified: true if analysis found no hazards",
        ));
    }
    for h in &card.hazard_log {
        if h.status == HazardStatus::Open {
            continue;
        }
        for name in &h.mitigations {
            if let Some(k) = card.guardrails.iter().position(|g| &g.name == name) {
                if card.guardrails[k].mechanism.trim().is_empty() {
                    out.push(Finding::error(
                        M,
                        format!("guardrails[{k}].mechanism"),
                        format!("guardrail `{name}` mitigating {} has no description", h.id),
                    ));
                }
            }
        }
    }
    if card.remediations.is_empty() && card.remediation_link.is_none() {
        out.push(Finding::error(
            M,
            "remediations",
            "no remediation entries and no remediation_link to a public document",
        ));
    }
    if card.governance.security_contact.is_none() {
        out.push(Finding::error(
            M,
            "governance.security_contact",
            "card lacks a security contact",
        ));
    }
    ValidationReport::from_findings(out)
}

pub fn validate_semantics(card: &SystemCard) -> ValidationReport {
    let mut out = check_invariants(card);

    let mut url = |path: String, value: &str| {
        if !is_url(value) {
            out.push(Finding::warning(
                FindingCode::BadUrlSyntax,
                path,
                format!("`{value}` is not an absolute URL"),
            ));
        }
    };
    for (i, r) in card.references.iter().enumerate() {
        url(format!("references[{i}].url"), &r.url);
    }
    for (i, m) in card.blueprint.models.iter().enumerate() {
        if !m.sbom_link.is_empty() {
            url(format!("blueprint.models[{i}].sbom_link"), &m.sbom_link);
        }
        if !m.provenance_link.is_empty() {
            url(format!("blueprint.models[{i}].provenance_link"), &m.provenance_link);
        }
    }
    for (i, h) in card.hazard_log.iter().enumerate() {
        if let Some(l) = &h.incident_link {
            url(format!("hazard_log[{i}].incident_link"), l);
        }
    }
    for (i, h) in card.history.iter().enumerate() {
        if let Some(l) = &h.incident_link {
            url(format!("history[{i}].incident_link"), l);
        }
    }
    if let Some(l) = &card.remediation_link {
        url("remediation_link".into(), l);
    }

    for (i, c) in card.optional_components.oss_components.iter().enumerate() {
        if c.name.trim().is_empty() {
            out.push(Finding::error(
                FindingCode::BadOptionalComponent,
                format!("optional_components.oss_components[{i}].name"),
                "open source component without a name",
            ));
        }
    }
    let oc = &card.optional_components;
    for (field, value) in [
        ("inference_engine", &oc.inference_engine),
        ("agentic_architecture", &oc.agentic_architecture),
        ("hosting_platform", &oc.hosting_platform),
    ] {
        if value.as_deref().is_some_and(|v| v.trim().is_empty()) {
            out.push(Finding::warning(
                FindingCode::BadOptionalComponent,
                format!("optional_components.{field}"),
                "optional component is present but empty",
            ));
        }
    }
    ValidationReport::from_findings(out)
}

pub fn validate(card: &SystemCard) -> ValidationReport {
    validate_essential(card).merge(validate_semantics(card))
}

/// Absolute URL with a host, or a `mailto:` URL.
pub fn is_url(s: &str) -> bool {
    match url::Url::parse(s) {
        Ok(u) => u.has_host() || (u.scheme() == "mailto" && u.path().contains('@')),
        Err(_) => false,
    }
}

pub fn is_email(s: &str) -> bool {
    let Some((local, domain)) = s.split_once('@') else {
        return false;
    };
    !local.is_empty()
        && !domain.contains('@')
        && domain.contains('.')
        && !domain.starts_with('.')
        && !domain.ends_with('.')
        && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}
