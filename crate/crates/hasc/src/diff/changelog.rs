// SPDX-License-Identifier: Apache-2.0

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{is_bookkeeping, CardDiff, VersionChange};
use crate::card::{CardVersion, ChangeType, VersionHistoryEntry};
use crate::path::{FieldPath, Segment};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeClass {
    pub change_type: ChangeType,
    pub label: String,
}

impl ChangeClass {
    fn new(change_type: ChangeType, label: &str) -> Self {
        Self {
            change_type,
            label: label.to_string(),
        }
    }
}

fn top(path: &FieldPath) -> Option<&str> {
    match path.segments().first() {
        Some(Segment::Key(k)) => Some(k),
        _ => None,
    }
}

fn second(path: &FieldPath) -> Option<&Segment> {
    path.segments().get(1)
}

fn is_latency_class(path: &FieldPath) -> bool {
    top(path) == Some("evaluations") || {
        let s = path.to_string().to_lowercase();
        s.contains("latency") || s.contains("throughput")
    }
}

/// Classifies a diff. Rules apply in order: initial release; model
/// replacement or intent change (major); new hazards or guardrail version
/// changes (safety enhancement); evaluation-only changes (performance
/// tuning); anything else functional (maintenance); otherwise no functional
/// change. Version, publication date and history are ignored.
pub fn classify_change(diff: &CardDiff) -> ChangeClass {
    if diff.initial {
        return ChangeClass::new(ChangeType::Major, "initial release");
    }
    let model_added = diff.model_changes.iter().any(|m| m.old_version.is_none());
    let model_removed = diff.model_changes.iter().any(|m| m.new_version.is_none());
    if model_added && model_removed {
        return ChangeClass::new(ChangeType::Major, "model replacement");
    }
    let functional: Vec<&FieldPath> = diff.paths().filter(|p| !is_bookkeeping(p)).collect();
    if functional.iter().any(|p| top(p) == Some("intent")) {
        return ChangeClass::new(ChangeType::Major, "intended use change");
    }
    if !diff.hazards_added.is_empty() || !diff.guardrail_changes.is_empty() {
        return ChangeClass::new(ChangeType::Minor, "safety enhancement");
    }
    if functional.is_empty() {
        return ChangeClass::new(ChangeType::Minor, "no functional change");
    }
    if functional.iter().any(|p| is_latency_class(p)) {
        return ChangeClass::new(ChangeType::Minor, "performance tuning");
    }
    ChangeClass::new(ChangeType::Minor, "maintenance")
}

fn push_unique(out: &mut Vec<String>, line: String) {
    if !out.contains(&line) {
        out.push(line);
    }
}

fn version_line(section: &str, kind: &str, c: &VersionChange) -> String {
    match (&c.old_version, &c.new_version) {
        (Some(a), Some(b)) => format!("{section}: Updated the \"{}\" {kind} from {a} to {b}.", c.name),
        (None, Some(b)) => format!("{section}: Added the \"{}\" {kind} ({b}).", c.name),
        (Some(_), None) => format!("{section}: Removed the \"{}\" {kind}.", c.name),
        (None, None) => format!("{section}: Updated the \"{}\" {kind}.", c.name),
    }
}

fn keyed_name(path: &FieldPath, depth: usize) -> Option<&str> {
    match path.segments().get(depth) {
        Some(Segment::Match { value, .. }) => Some(value),
        _ => None,
    }
}

/// Human-readable list of the areas a diff touches, one line per change,
/// each prefixed by the card section it belongs to.
pub fn affected_components(diff: &CardDiff) -> Vec<String> {
    let mut out = Vec::new();
    let paths: Vec<&FieldPath> = diff.paths().filter(|p| !is_bookkeeping(p)).collect();
    let section = |name: &'static str| paths.iter().copied().filter(move |p| top(p) == Some(name));

    const HAZARDS: &str = "Proactive hazard analysis";
    for id in &diff.hazards_added {
        out.push(format!("{HAZARDS}: Added {id} to the hazard log."));
    }
    for id in &diff.hazards_removed {
        out.push(format!("{HAZARDS}: Removed {id} from the hazard log."));
    }
    for p in section("hazard_log") {
        if p.segments().len() > 2 {
            if let Some(id) = keyed_name(p, 1) {
                push_unique(&mut out, format!("{HAZARDS}: Updated the entry for {id}."));
            }
        }
    }
    if section("none_identified").next().is_some() {
        push_unique(&mut out, format!("{HAZARDS}: Updated the hazard analysis outcome."));
    }

    const GUARDRAILS: &str = "Embedded guardrails";
    for c in &diff.guardrail_changes {
        out.push(version_line(GUARDRAILS, "guardrail", c));
    }
    for p in section("guardrails") {
        if let Some(name) = keyed_name(p, 1) {
            if !diff.guardrail_changes.iter().any(|c| c.name == name) {
                push_unique(&mut out, format!("{GUARDRAILS}: Updated the \"{name}\" guardrail."));
            }
        }
    }

    const BLUEPRINT: &str = "System blueprint";
    for c in &diff.model_changes {
        out.push(version_line(BLUEPRINT, "model", c));
    }
    for p in section("blueprint") {
        let line = match second(p) {
            Some(Segment::Key(k)) if k == "system_prompt_doc" => "Updated the \"System prompt\" documentation.",
            Some(Segment::Key(k)) if k == "architecture_summary" => "Updated the architecture summary.",
            Some(Segment::Key(k)) if k == "components" => "Updated the component inventory.",
            Some(Segment::Key(k)) if k == "data_flows" => "Updated the data flows.",
            Some(Segment::Key(k)) if k == "models" => {
                if diff
                    .model_changes
                    .iter()
                    .any(|c| Some(c.name.as_str()) == keyed_name(p, 2))
                {
                    continue;
                }
                "Updated model references."
            }
            _ => "Updated the blueprint.",
        };
        push_unique(&mut out, format!("{BLUEPRINT}: {line}"));
    }

    for a in diff.added.iter().filter(|a| top(&a.path) == Some("remediations")) {
        let id = a.value.get("id").and_then(Value::as_str);
        if let Some(id) = id.filter(|id| !diff.hazards_added.iter().any(|h| h.as_str() == *id)) {
            push_unique(&mut out, format!("Remediations: Recorded the fix for {id}."));
        }
    }
    let recorded_new = |p: &FieldPath| {
        diff.added
            .iter()
            .any(|a| &a.path == p && top(p) == Some("remediations") && p.segments().len() == 2)
    };
    if section("remediations")
        .chain(section("remediation_link"))
        .any(|p| !recorded_new(p))
    {
        push_unique(&mut out, "Remediations: Updated remediation records.".to_string());
    }

    for (key, line) in [
        ("intent", "Intended use: Updated the intended use scope."),
        ("provenance", "Data provenance: Updated provenance records."),
        ("evaluations", "Evaluations: Updated evaluation results."),
        ("limitations", "Known limitations: Updated the limitations list."),
        ("governance", "Governance: Updated contacts."),
        ("optional_components", "Optional components: Updated component details."),
        ("references", "References: Updated references."),
    ] {
        if section(key).next().is_some() {
            out.push(line.to_string());
        }
    }
    out
}

fn draft_summary(diff: &CardDiff, class: &ChangeClass) -> String {
    if diff.initial {
        return format!("Initial release of {}.", diff.card_id);
    }
    let mut parts = Vec::new();
    if !diff.hazards_added.is_empty() {
        let ids: Vec<String> = diff.hazards_added.iter().map(ToString::to_string).collect();
        parts.push(format!("added {} to the hazard log", ids.join(", ")));
    }
    let updated: Vec<&str> = diff
        .guardrail_changes
        .iter()
        .filter(|c| c.new_version.is_some())
        .map(|c| c.name.as_str())
        .collect();
    if !updated.is_empty() {
        parts.push(format!("updated guardrails: {}", updated.join(", ")));
    }
    let models: Vec<&str> = diff.model_changes.iter().map(|c| c.name.as_str()).collect();
    if !models.is_empty() {
        parts.push(format!("changed models: {}", models.join(", ")));
    }
    if parts.is_empty() {
        return match class.label.as_str() {
            "performance tuning" => "Updated evaluation results; no safety components changed.".to_string(),
            "no functional change" => "No functional change.".to_string(),
            _ => "Maintenance update; no safety components changed.".to_string(),
        };
    }
    let mut s = parts.join("; ");
    s[..1].make_ascii_uppercase();
    s.push('.');
    s
}

/// Drafts the history entry for a new version from its diff. The summary is a
/// deterministic one-liner; callers may overwrite it.
pub fn make_changelog_entry(
    diff: &CardDiff,
    new_version: CardVersion,
    published: NaiveDate,
    incident_link: Option<String>,
) -> VersionHistoryEntry {
    let class = classify_change(diff);
    VersionHistoryEntry {
        version: new_version,
        published,
        change_type: class.change_type,
        summary: draft_summary(diff, &class),
        change_label: class.label,
        associated_hazards: diff.hazards_added.clone(),
        affected_components: affected_components(diff),
        incident_link,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{parse_card, Format, SystemCard};
    use crate::diff::{diff_cards, initial_diff};
    use std::path::Path;

    fn fixture(name: &str) -> SystemCard {
        let p = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures/scenario")
            .join(name);
        parse_card(&std::fs::read(p).unwrap(), Format::Json).unwrap()
    }

    #[test]
    fn scenario_classification() {
        let v10 = fixture("card-v1.0.hasc.json");
        let v12 = fixture("card-v1.2.hasc.json");
        let v13 = fixture("card-v1.3.hasc.json");
        let c = classify_change(&initial_diff(&v10));
        assert_eq!(
            (c.change_type, c.label.as_str()),
            (ChangeType::Major, "initial release")
        );
        let c = classify_change(&diff_cards(&v10, &v12).unwrap());
        assert_eq!(
            (c.change_type, c.label.as_str()),
            (ChangeType::Minor, "performance tuning")
        );
        let c = classify_change(&diff_cards(&v12, &v13).unwrap());
        assert_eq!(
            (c.change_type, c.label.as_str()),
            (ChangeType::Minor, "safety enhancement")
        );
    }

    #[test]
    fn scenario_entry_matches_history() {
        let v12 = fixture("card-v1.2.hasc.json");
        let v13 = fixture("card-v1.3.hasc.json");
        let expected = v13.history.last().unwrap();
        let d = diff_cards(&v12, &v13).unwrap();
        let e = make_changelog_entry(&d, v13.version, v13.published, expected.incident_link.clone());
        assert_eq!(e.version, expected.version);
        assert_eq!(e.published, expected.published);
        assert_eq!(e.change_type, expected.change_type);
        assert_eq!(e.change_label, expected.change_label);
        assert_eq!(e.associated_hazards, expected.associated_hazards);
        assert_eq!(e.incident_link, expected.incident_link);
        assert_eq!(
            e.affected_components,
            vec![
                "Proactive hazard analysis: Added ASH-2025-0142 to the hazard log.",
                "Embedded guardrails: Updated the \"Medical query safety check\" guardrail from 2.0.3 to 2.1.0.",
                "System blueprint: Updated the \"System prompt\" documentation.",
            ]
        );
    }

    #[test]
    fn empty_diff_entry() {
        let v13 = fixture("card-v1.3.hasc.json");
        let d = diff_cards(&v13, &v13).unwrap();
        let e = make_changelog_entry(&d, "v1.4".parse().unwrap(), v13.published, None);
        assert!(e.associated_hazards.is_empty());
        assert_eq!(e.change_label, "no functional change");
    }
}
