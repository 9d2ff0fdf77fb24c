// SPDX-License-Identifier: Apache-2.0

//! Markdown and HTML views of a card.
//!
//! Section order is fixed so that cards from different vendors read the
//! same way. Dates are ISO-8601. By default internal content is removed by
//! redacting the card before rendering.

mod doc;

use serde::{Deserialize, Serialize};

use crate::card::{redact_public, redaction_count, HazardStatus, RedactionError, SystemCard, VersionHistoryEntry};
use doc::{code, link, text, Block, Document, FieldValue, Line};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Full,
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RenderOptions {
    pub variant: Variant,
    /// Render paths marked internal. Off by default.
    pub include_internal: bool,
}

impl RenderOptions {
    pub fn summary() -> Self {
        Self {
            variant: Variant::Summary,
            ..Self::default()
        }
    }

    pub fn internal() -> Self {
        Self {
            include_internal: true,
            ..Self::default()
        }
    }
}

pub const NO_HISTORY: &str = "No history recorded.";

pub fn render_markdown(card: &SystemCard, opts: RenderOptions) -> Result<String, RedactionError> {
    Ok(doc::to_markdown(&build(card, opts)?))
}

pub fn render_html(card: &SystemCard, opts: RenderOptions) -> Result<String, RedactionError> {
    Ok(doc::to_html(&build(card, opts)?))
}

/// The version history as a newest-first Markdown list. The newest entry is
/// marked current.
pub fn render_changelog(history: &[VersionHistoryEntry]) -> String {
    if history.is_empty() {
        return format!("{NO_HISTORY}\n");
    }
    let mut md = doc::blocks_to_markdown(&[history_block(history, None, false)]);
    md.push('\n');
    md
}

fn build(card: &SystemCard, opts: RenderOptions) -> Result<Document, RedactionError> {
    let public;
    let card = if opts.include_internal {
        card
    } else {
        public = redact_public(card)?;
        &public
    };
    let full = opts.variant == Variant::Full;
    let mut lead = vec![text(format!("Version {}, published {}.", card.version, card.published))];
    if let Some(n) = redaction_count(card).filter(|n| *n > 0) {
        lead.push(text(format!(
            "Public version: {n} internal field{} withheld.",
            if n == 1 { "" } else { "s" }
        )));
    }
    let mut sections = vec![overview(card)];
    if full {
        sections.push(blueprint(card));
        sections.push(models(card));
        sections.push(evaluations(card));
        sections.push(limitations(card));
    }
    sections.push(hazards(card, full));
    sections.push(guardrails(card, full));
    if full {
        sections.push(remediations(card));
    }
    sections.push(history_section(card, full));
    sections.push(governance(card, full));
    Ok(Document {
        title: format!("System card: {} {}", card.card_id, card.version),
        lead,
        sections,
    })
}

fn section(title: &str, anchor: &str, blocks: Vec<Block>) -> Block {
    Block::Section {
        title: title.to_string(),
        anchor: anchor.to_string(),
        blocks,
    }
}

fn none_line(what: &str) -> Block {
    Block::Para(text(format!("No {what} recorded.")))
}

fn list_value(items: &[String]) -> FieldValue {
    FieldValue::List(items.iter().map(text).collect())
}

fn or_dash(s: &str) -> Line {
    if s.trim().is_empty() {
        text("None")
    } else {
        text(s)
    }
}

fn overview(card: &SystemCard) -> Block {
    let i = &card.intent;
    section(
        "Overview & Intent",
        "overview",
        vec![Block::Fields(vec![
            ("Card".into(), FieldValue::Line(code(&card.card_id))),
            ("Version".into(), FieldValue::Line(text(card.version.to_string()))),
            ("Published".into(), FieldValue::Line(text(card.published.to_string()))),
            ("Intended users".into(), list_value(&i.intended_users)),
            ("Intended uses".into(), list_value(&i.intended_uses)),
            ("Prohibited uses".into(), list_value(&i.prohibited_uses)),
            (
                "Operational boundaries".into(),
                FieldValue::Line(or_dash(&i.operational_boundaries)),
            ),
        ])],
    )
}

fn blueprint(card: &SystemCard) -> Block {
    let bp = &card.blueprint;
    let mut blocks = vec![Block::Para(or_dash(&bp.architecture_summary))];
    if bp.components.is_empty() {
        blocks.push(none_line("components"));
    } else {
        blocks.push(Block::Table {
            head: vec!["Component".into(), "Kind".into(), "Version".into()],
            rows: bp
                .components
                .iter()
                .map(|c| {
                    let kind = serde_json::to_value(c.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string));
                    vec![text(&c.name), text(kind.unwrap_or_default()), or_dash(&c.version)]
                })
                .collect(),
        });
    }
    if !bp.data_flows.is_empty() {
        blocks.push(Block::Sub {
            title: "Data flows".into(),
            anchor: None,
            blocks: vec![Block::Bullets(
                bp.data_flows
                    .iter()
                    .map(|f| {
                        let mut l = text(format!("{} to {}", f.from, f.to));
                        if !f.description.is_empty() {
                            l.extend(text(format!(": {}", f.description)));
                        }
                        l
                    })
                    .collect(),
            )],
        });
    }
    if !bp.system_prompt_doc.is_empty() {
        blocks.push(Block::Fields(vec![(
            "System prompt".into(),
            FieldValue::Line(text(&bp.system_prompt_doc)),
        )]));
    }
    let oc = &card.optional_components;
    let mut opt = Vec::new();
    for (label, v) in [
        ("Inference engine", &oc.inference_engine),
        ("Agentic architecture", &oc.agentic_architecture),
        ("Hosting platform", &oc.hosting_platform),
    ] {
        if let Some(v) = v {
            opt.push((label.to_string(), FieldValue::Line(text(v))));
        }
    }
    if !oc.oss_components.is_empty() {
        opt.push((
            "Open source components".into(),
            FieldValue::List(
                oc.oss_components
                    .iter()
                    .map(|o| {
                        text(if o.version.is_empty() {
                            o.name.clone()
                        } else {
                            format!("{} {}", o.name, o.version)
                        })
                    })
                    .collect(),
            ),
        ));
    }
    if !opt.is_empty() {
        blocks.push(Block::Sub {
            title: "Optional components".into(),
            anchor: None,
            blocks: vec![Block::Fields(opt)],
        });
    }
    section("Blueprint", "blueprint", blocks)
}

fn models(card: &SystemCard) -> Block {
    let mut blocks = Vec::new();
    if card.blueprint.models.is_empty() {
        blocks.push(none_line("models"));
    } else {
        blocks.push(Block::Table {
            head: vec!["Model".into(), "Version".into(), "SBOM".into(), "Provenance".into()],
            rows: card
                .blueprint
                .models
                .iter()
                .map(|m| {
                    vec![
                        text(&m.name),
                        text(&m.version),
                        link("SBOM", &m.sbom_link),
                        link("Provenance", &m.provenance_link),
                    ]
                })
                .collect(),
        });
    }
    if !card.provenance.is_empty() {
        blocks.push(Block::Sub {
            title: "Data provenance".into(),
            anchor: None,
            blocks: vec![Block::Table {
                head: vec![
                    "Source".into(),
                    "Acquired".into(),
                    "Actor".into(),
                    "Transformation".into(),
                    "Digest".into(),
                ],
                rows: card
                    .provenance
                    .iter()
                    .map(|p| {
                        vec![
                            text(&p.source),
                            text(p.acquired.to_rfc3339()),
                            text(&p.actor),
                            or_dash(&p.transformation),
                            code(&p.content_digest),
                        ]
                    })
                    .collect(),
            }],
        });
    }
    section("Models & Provenance", "models", blocks)
}

fn evaluations(card: &SystemCard) -> Block {
    let blocks = if card.evaluations.is_empty() {
        vec![none_line("evaluations")]
    } else {
        vec![Block::Table {
            head: vec![
                "Evaluation".into(),
                "Metric".into(),
                "Value".into(),
                "Dataset".into(),
                "Conditions".into(),
            ],
            rows: card
                .evaluations
                .iter()
                .map(|e| {
                    vec![
                        text(&e.name),
                        text(&e.metric),
                        text(&e.value),
                        or_dash(e.dataset.as_deref().unwrap_or("")),
                        or_dash(e.conditions.as_deref().unwrap_or("")),
                    ]
                })
                .collect(),
        }]
    };
    section("Evaluations", "evaluations", blocks)
}

fn limitations(card: &SystemCard) -> Block {
    let blocks = if card.limitations.is_empty() {
        vec![none_line("limitations")]
    } else {
        vec![Block::Bullets(
            card.limitations
                .iter()
                .map(|l| text(format!("{}: {}", l.category, l.text)))
                .collect(),
        )]
    };
    section("Limitations", "limitations", blocks)
}

fn status_title(s: HazardStatus) -> &'static str {
    match s {
        HazardStatus::Open => "Open",
        HazardStatus::Mitigated => "Mitigated",
        HazardStatus::Remediated => "Remediated",
        HazardStatus::Accepted => "Accepted",
    }
}

fn hazards(card: &SystemCard, full: bool) -> Block {
    let mut blocks = Vec::new();
    if card.hazard_log.is_empty() {
        blocks.push(Block::Para(text(if card.none_identified {
            "Hazard analysis performed: none identified."
        } else {
            "No hazards recorded."
        })));
    } else if !full {
        blocks.push(Block::Table {
            head: vec!["Hazard".into(), "Title".into(), "Status".into()],
            rows: card
                .hazard_log
                .iter()
                .map(|h| vec![text(h.id.as_str()), text(&h.title), text(status_title(h.status))])
                .collect(),
        });
    } else {
        for h in &card.hazard_log {
            let category = match h.category {
                crate::card::HazardCategory::Security => "Security",
                crate::card::HazardCategory::Safety => "Safety",
            };
            let mut fields = vec![
                ("Category".to_string(), FieldValue::Line(text(category))),
                ("Status".to_string(), FieldValue::Line(text(status_title(h.status)))),
                (
                    "Discovered".to_string(),
                    FieldValue::Line(text(h.discovered.to_string())),
                ),
            ];
            if let Some(p) = &h.probability_score {
                let ctx = h.probability_context.as_deref().unwrap_or("");
                fields.push(("Probability".into(), FieldValue::Line(text(format!("{p} ({ctx})")))));
            }
            fields.push(("Mitigations".into(), list_value(&h.mitigations)));
            if let Some(l) = &h.incident_link {
                fields.push(("Incident report".into(), FieldValue::Line(link(l.clone(), l))));
            }
            let mut inner = Vec::new();
            if !h.description.is_empty() {
                inner.push(Block::Para(text(&h.description)));
            }
            inner.push(Block::Fields(fields));
            blocks.push(Block::Sub {
                title: format!("{}: {}", h.id, h.title),
                anchor: Some(format!("hazard-{}", h.id)),
                blocks: inner,
            });
        }
    }
    section("Hazard Log", "hazard-log", blocks)
}

fn guardrails(card: &SystemCard, full: bool) -> Block {
    let blocks = if card.guardrails.is_empty() {
        vec![none_line("guardrails")]
    } else {
        let mut head = vec!["Guardrail".to_string(), "Version".to_string()];
        if full {
            head.extend(["Mechanism".to_string(), "Covers".to_string()]);
        }
        vec![Block::Table {
            head,
            rows: card
                .guardrails
                .iter()
                .map(|g| {
                    let mut row = vec![text(&g.name), text(&g.version)];
                    if full {
                        let covers: Vec<&str> = g.covers.iter().map(|c| c.as_str()).collect();
                        row.push(or_dash(&g.mechanism));
                        row.push(or_dash(&covers.join(", ")));
                    }
                    row
                })
                .collect(),
        }]
    };
    section("Guardrails", "guardrails", blocks)
}

fn remediations(card: &SystemCard) -> Block {
    let mut blocks = Vec::new();
    if card.remediations.is_empty() {
        blocks.push(none_line("remediations"));
    } else {
        blocks.push(Block::Table {
            head: vec!["Hazard".into(), "Fixed in".into(), "Summary".into()],
            rows: card
                .remediations
                .iter()
                .map(|r| vec![text(r.id.as_str()), text(r.fixed_in.to_string()), or_dash(&r.summary)])
                .collect(),
        });
    }
    if let Some(l) = &card.remediation_link {
        blocks.push(Block::Para([text("Further fixes: "), link(l.clone(), l)].concat()));
    }
    section("Remediations", "remediations", blocks)
}

fn history_block(history: &[VersionHistoryEntry], card: Option<&SystemCard>, head_only: bool) -> Block {
    let mut entries: Vec<&VersionHistoryEntry> = history.iter().collect();
    entries.sort_by_key(|e| std::cmp::Reverse(e.version));
    if head_only {
        entries.truncate(1);
    }
    let rendered = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let current = if i == 0 { " (Current)" } else { "" };
            let title = format!("{}{current} - Published {}", e.version, e.published);
            let hazards: Vec<String> = e
                .associated_hazards
                .iter()
                .map(|id| match card.and_then(|c| c.hazard(id)) {
                    Some(h) => format!("{id} ({})", h.title),
                    None => id.to_string(),
                })
                .collect();
            let fields = vec![
                (
                    "Change type".to_string(),
                    FieldValue::Line(text(format!("{} ({})", e.change_type.title(), e.change_label))),
                ),
                (
                    "Associated hazard(s)".to_string(),
                    FieldValue::Line(or_dash(&hazards.join(", "))),
                ),
                ("Summary of changes".to_string(), FieldValue::Line(or_dash(&e.summary))),
                ("Affected components".to_string(), list_value(&e.affected_components)),
                (
                    "Linked incident report".to_string(),
                    FieldValue::Line(match &e.incident_link {
                        Some(l) => link(l.clone(), l),
                        None => text("None"),
                    }),
                ),
            ];
            (title, fields)
        })
        .collect();
    Block::Entries(rendered)
}

fn history_section(card: &SystemCard, full: bool) -> Block {
    let blocks = if card.history.is_empty() {
        vec![Block::Para(text(NO_HISTORY))]
    } else {
        vec![history_block(&card.history, Some(card), !full)]
    };
    section("Version History", "history", blocks)
}

fn governance(card: &SystemCard, full: bool) -> Block {
    let g = &card.governance;
    let contact = |v: &Option<String>| match v {
        Some(c) if c.contains('@') && !c.contains("://") => FieldValue::Line(link(c.clone(), &format!("mailto:{c}"))),
        Some(c) => FieldValue::Line(link(c.clone(), c)),
        None => FieldValue::Line(text("None")),
    };
    let mut blocks = vec![Block::Fields(vec![
        ("Security contact".into(), contact(&g.security_contact)),
        ("Safety contact".into(), contact(&g.safety_contact)),
        ("Owner".into(), FieldValue::Line(or_dash(&g.owner))),
    ])];
    if full && !card.references.is_empty() {
        blocks.push(Block::Sub {
            title: "References".into(),
            anchor: None,
            blocks: vec![Block::Bullets(
                card.references.iter().map(|r| link(r.label.clone(), &r.url)).collect(),
            )],
        });
    }
    section("Governance", "governance", blocks)
}
