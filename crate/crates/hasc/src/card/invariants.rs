// SPDX-License-Identifier: Apache-2.0

use std::collections::{HashMap, HashSet};

use super::{CardVersion, ChangeType, ComponentKind, HazardCategory, HazardStatus, HexStatus, SystemCard};
use crate::ids::Scheme;
use crate::path::FieldPath;
use crate::validation::{is_email, is_url, Finding, FindingCode as C};

/// Checks every type-level invariant of a parsed card. Needs nothing beyond
/// the card itself. All returned findings have error severity.
pub fn check_invariants(card: &SystemCard) -> Vec<Finding> {
    let mut out = Vec::new();
    history(card, &mut out);
    references(card, &mut out);
    blueprint(card, &mut out);
    hazards(card, &mut out);
    misc(card, &mut out);
    out
}

fn history(card: &SystemCard, out: &mut Vec<Finding>) {
    let h = &card.history;
    for (i, pair) in h.windows(2).enumerate() {
        if pair[1].version <= pair[0].version {
            out.push(Finding::error(
                C::HistoryOrder,
                format!("history[{}].version", i + 1),
                format!("{} does not follow {}", pair[1].version, pair[0].version),
            ));
        }
    }
    if let Some(first) = h.first() {
        if first.change_type != ChangeType::Major {
            out.push(Finding::error(
                C::FirstEntryNotMajor,
                "history[0].change_type",
                "the first history entry must be a major change",
            ));
        }
    }
    if let Some(head) = h.last() {
        if head.version != card.version {
            out.push(Finding::error(
                C::HistoryHeadMismatch,
                format!("history[{}].version", h.len() - 1),
                format!(
                    "newest history entry {} differs from card version {}",
                    head.version, card.version
                ),
            ));
        }
    }
    if let Some(newest) = h.iter().map(|e| e.published).max() {
        if card.published < newest {
            out.push(Finding::error(
                C::PublishedBeforeHistory,
                "published",
                format!(
                    "card published {} before its newest history entry ({newest})",
                    card.published
                ),
            ));
        }
    }
}

fn references(card: &SystemCard, out: &mut Vec<Finding>) {
    let ids: HashSet<_> = card.hazard_log.iter().map(|h| &h.id).collect();
    let mut dangling = |path: String, id: &crate::ids::HazardId| {
        if !ids.contains(id) {
            out.push(Finding::error(
                C::DanglingHazardRef,
                path,
                format!("{id} is not in the hazard log"),
            ));
        }
    };
    for (i, g) in card.guardrails.iter().enumerate() {
        for (j, id) in g.covers.iter().enumerate() {
            dangling(format!("guardrails[{i}].covers[{j}]"), id);
        }
    }
    for (i, r) in card.remediations.iter().enumerate() {
        dangling(format!("remediations[{i}].id"), &r.id);
    }
    for (i, e) in card.history.iter().enumerate() {
        for (j, id) in e.associated_hazards.iter().enumerate() {
            dangling(format!("history[{i}].associated_hazards[{j}]"), id);
        }
    }

    let guardrails: HashSet<&str> = card.guardrails.iter().map(|g| g.name.as_str()).collect();
    for (i, h) in card.hazard_log.iter().enumerate() {
        for (j, m) in h.mitigations.iter().enumerate() {
            if !guardrails.contains(m.as_str()) {
                out.push(Finding::error(
                    C::DanglingGuardrailRef,
                    format!("hazard_log[{i}].mitigations[{j}]"),
                    format!("mitigation names unknown guardrail `{m}`"),
                ));
            }
        }
    }

    duplicates(card.hazard_log.iter().map(|h| h.id.as_str()), "hazard_log", "id", out);
    duplicates(
        card.guardrails.iter().map(|g| g.name.as_str()),
        "guardrails",
        "name",
        out,
    );
    duplicates(
        card.blueprint.components.iter().map(|c| c.name.as_str()),
        "blueprint.components",
        "name",
        out,
    );
    duplicates(
        card.blueprint.models.iter().map(|m| m.name.as_str()),
        "blueprint.models",
        "name",
        out,
    );
}

fn duplicates<'a>(keys: impl Iterator<Item = &'a str>, list: &str, field: &str, out: &mut Vec<Finding>) {
    let mut seen = HashSet::new();
    for (i, k) in keys.enumerate() {
        if !seen.insert(k) {
            out.push(Finding::error(
                C::DuplicateKey,
                format!("{list}[{i}].{field}"),
                format!("`{k}` appears more than once"),
            ));
        }
    }
}

fn blueprint(card: &SystemCard, out: &mut Vec<Finding>) {
    let bp = &card.blueprint;
    let declared: HashSet<&str> = bp.components.iter().map(|c| c.name.as_str()).collect();
    for (i, f) in bp.data_flows.iter().enumerate() {
        for (end, name) in [("from", &f.from), ("to", &f.to)] {
            if !declared.contains(name.as_str()) {
                out.push(Finding::error(
                    C::UndeclaredComponent,
                    format!("blueprint.data_flows[{i}].{end}"),
                    format!("data flow endpoint `{name}` is not a declared component"),
                ));
            }
        }
    }
    let mut model_components: HashMap<&str, usize> = HashMap::new();
    for c in bp.components.iter().filter(|c| c.kind == ComponentKind::Model) {
        *model_components.entry(c.name.as_str()).or_default() += 1;
    }
    for (i, m) in bp.models.iter().enumerate() {
        if m.name.trim().is_empty() {
            out.push(Finding::error(
                C::EmptyField,
                format!("blueprint.models[{i}].name"),
                "model name is empty",
            ));
        }
        if m.version.trim().is_empty() {
            out.push(Finding::error(
                C::EmptyField,
                format!("blueprint.models[{i}].version"),
                "model version is empty",
            ));
        }
        let n = model_components.get(m.name.as_str()).copied().unwrap_or(0);
        if n != 1 {
            out.push(Finding::error(
                C::ModelComponentMismatch,
                format!("blueprint.models[{i}]"),
                format!(
                    "model `{}` appears {n} times among components of kind model (expected 1)",
                    m.name
                ),
            ));
        }
    }

    let norm = |s: &String| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let intended: HashSet<String> = card.intent.intended_uses.iter().map(norm).collect();
    for (i, p) in card.intent.prohibited_uses.iter().enumerate() {
        if intended.contains(&norm(p)) {
            out.push(Finding::error(
                C::IntentOverlap,
                format!("intent.prohibited_uses[{i}]"),
                format!("`{p}` is both intended and prohibited"),
            ));
        }
    }

    let mut earlier: HashSet<&str> = HashSet::new();
    for (i, r) in card.provenance.iter().enumerate() {
        if !is_hex_digest(&r.content_digest) {
            out.push(Finding::error(
                C::BadDigest,
                format!("provenance[{i}].content_digest"),
                "content digest must be lowercase hex",
            ));
        }
        if let Some(prior) = &r.prior_digest {
            if !earlier.contains(prior.as_str()) {
                out.push(Finding::error(
                    C::ProvenanceChain,
                    format!("provenance[{i}].prior_digest"),
                    "prior digest does not match any earlier record",
                ));
            }
        }
        earlier.insert(&r.content_digest);
    }
}

fn is_hex_digest(s: &str) -> bool {
    !s.is_empty() && s.len().is_multiple_of(2) && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn hazards(card: &SystemCard, out: &mut Vec<Finding>) {
    for (i, h) in card.hazard_log.iter().enumerate() {
        let want = match h.category {
            HazardCategory::Security => Scheme::Cve,
            HazardCategory::Safety => Scheme::Ash,
        };
        if h.id.scheme() != &want {
            out.push(Finding::error(
                C::SchemeMismatch,
                format!("hazard_log[{i}].id"),
                format!(
                    "{:?} hazards use {} identifiers, found {}",
                    h.category,
                    want.prefix(),
                    h.id
                ),
            ));
        }
        if h.probability_score.is_some() && h.probability_context.as_deref().is_none_or(|c| c.trim().is_empty()) {
            out.push(Finding::error(
                C::ProbabilityContextMissing,
                format!("hazard_log[{i}].probability_score"),
                "a probability score needs the input class it is conditioned on",
            ));
        }
        if matches!(h.status, HazardStatus::Mitigated | HazardStatus::Remediated)
            && h.mitigations.is_empty()
            && h.incident_link.is_none()
        {
            out.push(Finding::error(
                C::MitigationRequired,
                format!("hazard_log[{i}].mitigations"),
                format!("{} hazard needs a mitigation or an incident link", h.status.as_str()),
            ));
        }
        if let Some(hex) = &h.hex {
            if hex.hazard != h.id || hex.product != card.card_id {
                out.push(Finding::error(
                    C::HexMismatch,
                    format!("hazard_log[{i}].hex"),
                    "HeX statement must name this hazard and this card",
                ));
            }
            if hex.status == HexStatus::Fixed && !card.remediations.iter().any(|r| r.id == h.id) {
                out.push(Finding::error(
                    C::HexFixedWithoutRemediation,
                    format!("hazard_log[{i}].hex.status"),
                    format!("{} is declared fixed but has no remediation entry", h.id),
                ));
            }
        }
    }
    for (i, g) in card.guardrails.iter().enumerate() {
        if g.version.parse::<CardVersion>().is_err() {
            out.push(Finding::error(
                C::BadVersion,
                format!("guardrails[{i}].version"),
                format!("`{}` is not a MAJOR.MINOR[.PATCH] version", g.version),
            ));
        }
    }
    for (i, r) in card.remediations.iter().enumerate() {
        if r.fixed_in > card.version {
            out.push(Finding::error(
                C::RemediationAfterVersion,
                format!("remediations[{i}].fixed_in"),
                format!(
                    "fixed in {} which is newer than the card ({})",
                    r.fixed_in, card.version
                ),
            ));
        }
    }
}

fn misc(card: &SystemCard, out: &mut Vec<Finding>) {
    let g = &card.governance;
    for (field, value) in [
        ("security_contact", &g.security_contact),
        ("safety_contact", &g.safety_contact),
    ] {
        if let Some(v) = value {
            if !is_email(v) && !is_url(v) {
                out.push(Finding::error(
                    C::BadContact,
                    format!("governance.{field}"),
                    format!("`{v}` is neither an email address nor a URL"),
                ));
            }
        }
    }
    for key in card.visibility_marks.keys() {
        if key.parse::<FieldPath>().is_err() {
            out.push(Finding::error(
                C::BadMarkPath,
                "visibility_marks",
                format!("`{key}` is not a valid field path"),
            ));
        }
    }
    if card.none_identified && !card.hazard_log.is_empty() {
        out.push(Finding::error(
            C::NoneIdentifiedConflict,
            "none_identified",
            "none_identified is set but the hazard log is not empty",
        ));
    }
}
