// SPDX-License-Identifier: Apache-2.0

//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, FixedOffset, NaiveDate};
use hasc::assembly::Fragment;
use hasc::card::{from_tree, from_tree_unchecked, parse_card, to_tree, CardVersion, Format, HazardStatus, SystemCard};
use hasc::ids::HazardId;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> SystemCard {
    let p = fixture_path(rel);
    parse_card(&std::fs::read(&p).unwrap(), Format::from_path(&p)).unwrap()
}

const WORDS: &[&str] = &[
    "triage",
    "summary",
    "retrieval",
    "ranking",
    "gateway",
    "ledger",
    "clinic",
    "router",
    "vector",
    "policy",
    "ünïcode",
    "naïve café",
    "\"quoted\"",
    "<angle>",
    "a & b",
    "tab\there",
    "line\nbreak",
    "emoji 🚀",
    "back\\slash",
    "50% off",
    "#hash",
    "*star*",
    "_under_",
    "[link](x)",
    "`tick`",
    "ŝpecial",
    "日本語",
    "  padded  ",
];

fn word(rng: &mut TestRng) -> String {
    WORDS.choose(rng).unwrap().to_string()
}

fn sentence(rng: &mut TestRng) -> String {
    let n = rng.gen_range(2..7);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

fn hex_digest(rng: &mut TestRng) -> String {
    (0..32).map(|_| format!("{:02x}", rng.gen::<u8>())).collect()
}

fn date(rng: &mut TestRng, lo: NaiveDate, max_days: i64) -> NaiveDate {
    lo + Duration::days(rng.gen_range(0..=max_days))
}

fn semver(rng: &mut TestRng) -> String {
    format!(
        "{}.{}.{}",
        rng.gen_range(0..4),
        rng.gen_range(0..12),
        rng.gen_range(0..20)
    )
}

fn url(rng: &mut TestRng, what: &str) -> String {
    format!(
        "https://vendor{}.example/{what}/{}",
        rng.gen_range(0..50),
        rng.gen_range(0..10_000)
    )
}

/// A random card that parses strictly and does not fail validation.
pub fn random_card(rng: &mut TestRng) -> SystemCard {
    let card_id = format!("sys-{}", rng.gen_range(0..100_000));
    let base = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();

    // History: strictly increasing versions and non-decreasing dates.
    let n_hist = rng.gen_range(1..5);
    let mut versions = vec![CardVersion::new(1, 0, 0)];
    while versions.len() < n_hist {
        let last = *versions.last().unwrap();
        let next = match rng.gen_range(0..3) {
            0 => CardVersion::new(last.major + 1, 0, 0),
            1 => CardVersion::new(last.major, last.minor + 1, 0),
            _ => CardVersion::new(last.major, last.minor, last.patch + 1),
        };
        versions.push(next);
    }
    let mut day = date(rng, base, 400);
    let mut dates = Vec::new();
    for _ in &versions {
        dates.push(day);
        day += Duration::days(rng.gen_range(0..90));
    }
    let version = *versions.last().unwrap();
    let published = *dates.last().unwrap();

    // Blueprint.
    let n_models = rng.gen_range(1..4);
    let model_names: Vec<String> = (0..n_models)
        .map(|i| format!("model-{i}-{}", rng.gen_range(0..100)))
        .collect();
    let mut components: Vec<Value> = model_names
        .iter()
        .map(|m| json!({"name": m, "kind": "model", "version": semver(rng)}))
        .collect();
    for (i, kind) in ["gateway", "datastore", "connector", "guardrail-model", "other"]
        .iter()
        .enumerate()
    {
        if rng.gen_bool(0.5) {
            components.push(json!({"name": format!("{kind}-{i}"), "kind": kind, "version": semver(rng)}));
        }
    }
    components.shuffle(rng);
    let names: Vec<String> = components
        .iter()
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    let flows: Vec<Value> = (0..rng.gen_range(0..4))
        .map(|_| json!({"from": names.choose(rng).unwrap(), "to": names.choose(rng).unwrap(), "description": sentence(rng)}))
        .collect();
    let models: Vec<Value> = model_names
        .iter()
        .map(|m| json!({"name": m, "version": format!("{m}-v{}", rng.gen_range(1..9)), "sbom_link": url(rng, "sbom"), "provenance_link": url(rng, "prov")}))
        .collect();

    // Intent: intended and prohibited pools never overlap.
    let uses = [
        "summarization",
        "question answering",
        "search",
        "drafting",
        "classification",
        "translation",
    ];
    let banned = [
        "diagnosis",
        "legal advice",
        "credit decisions",
        "surveillance",
        "weapons design",
    ];
    let pick = |rng: &mut TestRng, pool: &[&str], lo: usize| -> Vec<String> {
        let n = rng.gen_range(lo..=pool.len().min(3));
        pool.choose_multiple(rng, n).map(|s| s.to_string()).collect()
    };
    let intended_uses = pick(rng, &uses, 1);
    let prohibited_uses = pick(rng, &banned, 0);

    let mut provenance: Vec<Value> = Vec::new();
    for _ in 0..rng.gen_range(0..4) {
        let mut rec = json!({
            "source": sentence(rng),
            "acquired": format!("2024-0{}-1{}T0{}:00:00+0{}:00", rng.gen_range(1..10), rng.gen_range(0..10), rng.gen_range(0..10), rng.gen_range(0..10)),
            "actor": word(rng),
            "transformation": sentence(rng),
            "content_digest": hex_digest(rng),
        });
        if !provenance.is_empty() && rng.gen_bool(0.5) {
            let prior = provenance.choose(rng).unwrap()["content_digest"].clone();
            rec["prior_digest"] = prior;
        }
        provenance.push(rec);
    }
    let evaluations: Vec<Value> = (0..rng.gen_range(0..4))
        .map(|i| {
            let metric = *["accuracy", "latency_p95_ms", "refusal_rate"].choose(rng).unwrap();
            let mut e = json!({"name": format!("eval {i} {}", word(rng)), "metric": metric, "value": format!("0.{}", rng.gen_range(10..99))});
            if rng.gen_bool(0.5) {
                e["dataset"] = json!(sentence(rng));
            }
            e
        })
        .collect();
    let limitations: Vec<Value> = (0..rng.gen_range(0..3))
        .map(|_| json!({"category": word(rng), "text": sentence(rng)}))
        .collect();

    // Guardrails, then hazards that reference them.
    let n_guard = rng.gen_range(0..4);
    let guard_names: Vec<String> = (0..n_guard).map(|i| format!("guard-{i}")).collect();
    let mut hazards: Vec<Value> = Vec::new();
    let mut used = std::collections::HashSet::new();
    for _ in 0..rng.gen_range(0..5) {
        let security = rng.gen_bool(0.3);
        let (prefix, category) = if security {
            ("CVE", "security")
        } else {
            ("ASH", "safety")
        };
        let year = rng.gen_range(2019..2026);
        let number = rng.gen_range(1..20_000);
        let id = format!("{prefix}-{year}-{number:04}");
        if !used.insert(id.clone()) {
            continue;
        }
        let status = ["open", "mitigated", "remediated", "accepted"]
            .choose(rng)
            .unwrap()
            .to_string();
        let mut mitigations: Vec<String> = Vec::new();
        if !guard_names.is_empty() {
            let k = rng.gen_range(0..=guard_names.len());
            mitigations = guard_names.choose_multiple(rng, k).cloned().collect();
        }
        let mut h = json!({
            "id": id,
            "title": sentence(rng),
            "category": category,
            "description": sentence(rng),
            "status": status,
            "mitigations": mitigations,
            "discovered": date(rng, base, 700),
        });
        if rng.gen_bool(0.4) {
            h["probability_score"] = json!(format!("0.{:04}", rng.gen_range(0..10_000)));
            h["probability_context"] = json!(sentence(rng));
        }
        let needs_link =
            matches!(status.as_str(), "mitigated" | "remediated") && h["mitigations"].as_array().unwrap().is_empty();
        if needs_link || rng.gen_bool(0.2) {
            h["incident_link"] = json!(url(rng, "incident"));
        }
        hazards.push(h);
    }
    let hazard_ids: Vec<String> = hazards.iter().map(|h| h["id"].as_str().unwrap().to_string()).collect();
    let guardrails: Vec<Value> = guard_names
        .iter()
        .map(|g| {
            let k = rng.gen_range(0..=hazard_ids.len());
            let covers: Vec<&String> = hazard_ids.choose_multiple(rng, k).collect();
            json!({"name": g, "version": semver(rng), "mechanism": sentence(rng), "covers": covers})
        })
        .collect();

    let mut remediations: Vec<Value> = Vec::new();
    for id in &hazard_ids {
        if rng.gen_bool(0.4) {
            let fixed_in = versions.choose(rng).unwrap();
            remediations.push(json!({"id": id, "fixed_in": fixed_in, "summary": sentence(rng)}));
        }
    }

    let history: Vec<Value> = versions
        .iter()
        .zip(&dates)
        .enumerate()
        .map(|(i, (v, d))| {
            let k = rng.gen_range(0..=hazard_ids.len().min(2));
            let assoc: Vec<&String> = hazard_ids.choose_multiple(rng, k).collect();
            let (ct, label) = if i == 0 {
                ("major", "initial release")
            } else {
                *[
                    ("minor", "maintenance"),
                    ("minor", "safety enhancement"),
                    ("major", "model replacement"),
                ]
                .choose(rng)
                .unwrap()
            };
            json!({
                "version": v, "published": d, "change_type": ct, "change_label": label,
                "associated_hazards": assoc, "summary": sentence(rng), "affected_components": [],
            })
        })
        .collect();

    let mut governance = json!({"owner": sentence(rng)});
    if rng.gen_bool(0.85) {
        governance["security_contact"] = json!(format!("security@vendor{}.example", rng.gen_range(0..50)));
    }
    if rng.gen_bool(0.5) {
        governance["safety_contact"] = json!(url(rng, "safety"));
    }

    let mut tree = json!({
        "card_id": card_id,
        "version": version,
        "published": published,
        "blueprint": {
            "architecture_summary": sentence(rng),
            "components": components,
            "data_flows": flows,
            "models": models,
            "system_prompt_doc": sentence(rng),
        },
        "intent": {
            "intended_users": pick(rng, &["clinicians", "analysts", "general public", "support staff"], 0),
            "intended_uses": intended_uses,
            "prohibited_uses": prohibited_uses,
            "operational_boundaries": sentence(rng),
        },
        "provenance": provenance,
        "evaluations": evaluations,
        "limitations": limitations,
        "hazard_log": hazards,
        "guardrails": guardrails,
        "remediations": remediations,
        "history": history,
        "governance": governance,
    });
    let obj = tree.as_object_mut().unwrap();
    if hazard_ids.is_empty() {
        obj.insert("none_identified".into(), json!(true));
    }
    if remediations_empty(obj) {
        obj.insert("remediation_link".into(), json!(url(rng, "fixed")));
    }
    if rng.gen_bool(0.5) {
        obj.insert(
            "optional_components".into(),
            json!({"inference_engine": word(rng), "oss_components": [{"name": "vllm", "version": semver(rng)}]}),
        );
    }
    if rng.gen_bool(0.5) {
        obj.insert(
            "references".into(),
            json!([{"label": sentence(rng), "url": url(rng, "ref")}]),
        );
    }
    if rng.gen_bool(0.3) && !hazard_ids.is_empty() {
        obj.insert(
            "visibility_marks".into(),
            json!({"hazard_log[*].incident_link": "internal"}),
        );
    }
    if rng.gen_bool(0.5) {
        obj.insert(
            "x_vendor".into(),
            json!({"pipeline": word(rng), "build": rng.gen_range(0..100_000), "flags": [word(rng), word(rng)]}),
        );
    }
    match from_tree(tree.clone()) {
        Ok(card) => card,
        Err(e) => panic!("generator produced an invalid card: {e}\n{tree:#}"),
    }
}

fn remediations_empty(obj: &Map<String, Value>) -> bool {
    obj["remediations"].as_array().unwrap().is_empty()
}

/// Applies one structural or textual change. The result always differs from
/// the input and parses, but may break cross-field invariants.
pub fn mutate_once(card: &SystemCard, rng: &mut TestRng) -> SystemCard {
    loop {
        let mut t = to_tree(card);
        apply_random_edit(&mut t, rng);
        if let Ok(c) = from_tree_unchecked(t) {
            if &c != card {
                return c;
            }
        }
    }
}

pub fn mutate(card: &SystemCard, rng: &mut TestRng, edits: usize) -> SystemCard {
    let mut c = card.clone();
    for _ in 0..edits {
        c = mutate_once(&c, rng);
    }
    c
}

fn arr<'a>(t: &'a mut Value, path: &[&str]) -> &'a mut Vec<Value> {
    let mut node = t;
    for k in path {
        node = node
            .as_object_mut()
            .unwrap()
            .entry(k.to_string())
            .or_insert_with(|| json!([]));
    }
    node.as_array_mut().unwrap()
}

fn apply_random_edit(t: &mut Value, rng: &mut TestRng) {
    match rng.gen_range(0..14) {
        0 => t["blueprint"]["architecture_summary"] = json!(sentence(rng)),
        1 => t["blueprint"]["system_prompt_doc"] = json!(sentence(rng)),
        2 => t["governance"]["owner"] = json!(sentence(rng)),
        3 => {
            let hs = arr(t, &["hazard_log"]);
            let id = format!("ASH-2025-{:04}", rng.gen_range(5000..9999));
            if hs.iter().any(|h| h["id"] == json!(id)) {
                return;
            }
            let at = rng.gen_range(0..=hs.len());
            hs.insert(
                at,
                json!({"id": id, "title": sentence(rng), "category": "safety", "status": "open", "discovered": "2025-03-01"}),
            );
        }
        4 => {
            let hs = arr(t, &["hazard_log"]);
            if !hs.is_empty() {
                let i = rng.gen_range(0..hs.len());
                hs.remove(i);
            }
        }
        5 => {
            let hs = arr(t, &["hazard_log"]);
            if hs.len() > 1 {
                let (i, j) = (rng.gen_range(0..hs.len()), rng.gen_range(0..hs.len()));
                let h = hs.remove(i);
                hs.insert(j, h);
            }
        }
        6 => {
            let hs = arr(t, &["hazard_log"]);
            if let Some(h) = hs.choose_mut(rng) {
                h["title"] = json!(sentence(rng));
            }
        }
        7 => {
            let gs = arr(t, &["guardrails"]);
            if let Some(g) = gs.choose_mut(rng) {
                g["version"] = json!(semver(rng));
            } else {
                gs.push(json!({"name": "guard-new", "version": semver(rng), "mechanism": sentence(rng)}));
            }
        }
        8 => {
            let cs = arr(t, &["blueprint", "components"]);
            let name = format!("extra-{}", rng.gen_range(0..1000));
            if cs.iter().any(|c| c["name"] == json!(name)) {
                return;
            }
            let at = rng.gen_range(0..=cs.len());
            cs.insert(at, json!({"name": name, "kind": "other"}));
        }
        9 => arr(t, &["intent", "intended_uses"]).push(json!(sentence(rng))),
        10 => {
            let ls = arr(t, &["limitations"]);
            if ls.is_empty() || rng.gen_bool(0.5) {
                ls.push(json!({"category": word(rng), "text": sentence(rng)}));
            } else {
                let i = rng.gen_range(0..ls.len());
                ls.remove(i);
            }
        }
        11 => {
            t.as_object_mut().unwrap().insert(
                "x_vendor".into(),
                json!({"pipeline": word(rng), "build": rng.gen_range(0..100_000)}),
            );
        }
        12 => {
            let g = t["governance"].as_object_mut().unwrap();
            if g.remove("safety_contact").is_none() {
                g.insert("safety_contact".into(), json!("safety@vendor.example"));
            }
        }
        _ => {
            let ms = arr(t, &["blueprint", "models"]);
            if let Some(m) = ms.choose_mut(rng) {
                m["version"] = json!(format!("rev-{}", rng.gen_range(0..1000)));
            }
        }
    }
}

/// A predecessor for gate tests: guardrail versions moved up, down, or kept,
/// and occasionally a guardrail dropped.
pub fn random_prev(card: &SystemCard, rng: &mut TestRng) -> SystemCard {
    let mut prev = card.clone();
    prev.guardrails.retain(|_| rng.gen_bool(0.85));
    for g in &mut prev.guardrails {
        let v: CardVersion = g.version.parse().unwrap();
        let shifted = match rng.gen_range(0..3) {
            0 => CardVersion::new(v.major, v.minor, v.patch + 1),
            1 if v.minor > 0 => CardVersion::new(v.major, v.minor - 1, v.patch),
            _ => v,
        };
        g.version = format!("{}.{}.{}", shifted.major, shifted.minor, shifted.patch);
    }
    prev
}

/// Hand-written versions of the three builtin gates.
pub fn oracle_missing_contact(card: &SystemCard) -> bool {
    card.governance.security_contact.is_none()
}

pub fn oracle_unmitigated_open(card: &SystemCard) -> bool {
    card.hazard_log
        .iter()
        .any(|h| h.status == HazardStatus::Open && h.mitigations.is_empty())
}

pub fn oracle_guardrail_regression(card: &SystemCard, prev: &SystemCard) -> bool {
    card.guardrails.iter().any(|g| {
        prev.guardrails
            .iter()
            .find(|p| p.name == g.name)
            .is_some_and(|p| g.version.parse::<CardVersion>().unwrap() < p.version.parse::<CardVersion>().unwrap())
    })
}

pub fn random_id(rng: &mut TestRng) -> HazardId {
    let scheme = ["ASH", "CVE", "GHSA", "OSV"].choose(rng).unwrap();
    let year = rng.gen_range(1999..=2026);
    let digits = rng.gen_range(4..=7);
    let number: u32 = if digits == 4 {
        rng.gen_range(1..10_000)
    } else {
        rng.gen_range(10u32.pow(digits - 1)..10u32.pow(digits))
    };
    format!("{scheme}-{year}-{number:04}").parse().unwrap()
}

/// Three fragments carved from one consistent tree, so they never disagree
/// on a scalar.
pub fn fragment_triple(rng: &mut TestRng) -> [Fragment; 3] {
    let universe = random_object(rng, 0);
    let stamp = |rng: &mut TestRng| -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339(&format!(
            "2025-0{}-1{}T10:00:00+00:00",
            rng.gen_range(1..10),
            rng.gen_range(0..10)
        ))
        .unwrap()
    };
    let stages = ["build", "qe", "security", "docs"];
    [0, 1, 2].map(|i| {
        let payload = match subset(&universe, rng) {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        Fragment::new(stages[(i + rng.gen_range(0..2)) % 4], stamp(rng), payload)
    })
}

const FRAGMENT_KEYS: &[&str] = &[
    "blueprint",
    "intent",
    "governance",
    "evaluations",
    "limitations",
    "x_vendor",
    "x_ci",
];

fn random_object(rng: &mut TestRng, depth: usize) -> Value {
    let mut m = Map::new();
    let keys: Vec<String> = if depth == 0 {
        FRAGMENT_KEYS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..rng.gen_range(1..5)).map(|i| format!("k{i}")).collect()
    };
    for k in keys {
        let v = match (depth, rng.gen_range(0..4)) {
            (d, 0) if d < 2 => random_object(rng, depth + 1),
            (_, 1) => {
                let mut items: Vec<Value> = (0..rng.gen_range(0..5))
                    .map(|i| json!(format!("{}-{i}", word(rng))))
                    .collect();
                items.dedup();
                Value::Array(items)
            }
            (_, 2) => json!(rng.gen_range(0..1000)),
            _ => json!(word(rng)),
        };
        m.insert(k, v);
    }
    Value::Object(m)
}

fn subset(v: &Value, rng: &mut TestRng) -> Value {
    match v {
        Value::Object(m) => {
            let mut out = Map::new();
            for (k, v) in m {
                if rng.gen_bool(0.6) {
                    out.insert(k.clone(), subset(v, rng));
                }
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect()),
        other => other.clone(),
    }
}
