// SPDX-License-Identifier: Apache-2.0

//! Release acceptance checks. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use common::*;
use hasc::assembly::merge_pair;
use hasc::attest::{self, VerifyReason};
use hasc::canonical::sha256_hex;
use hasc::card::{canonicalize, from_tree, parse_card, redact_public, serialize, to_tree, Format, SystemCard};
use hasc::diff::{apply_diff, diff_cards};
use hasc::distribution::{self, publish, ServeConfig};
use hasc::ids::{format_hazard_id, parse_hazard_id, HazardId, IdError, IdRegistry};
use hasc::policy::{builtin_policies, evaluate_at, Outcome, RuleSeverity};
use serde_json::{json, Value};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn hasc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hasc"))
        .args(args)
        .output()
        .expect("hasc binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn scenario(rel: &str) -> String {
    fixture_path("scenario").join(rel).display().to_string()
}

fn scenario_reproduction() -> Check {
    let out = tempfile::tempdir().unwrap();
    for v in ["1.0", "1.2", "1.3"] {
        let target = out.path().join(format!("v{v}.hasc.json"));
        let frag = |stage: &str| scenario(&format!("v{v}/{stage}.fragment.yaml"));
        let o = hasc(&[
            "assemble",
            "-f",
            &frag("build"),
            "-f",
            &frag("qe"),
            "-f",
            &frag("security"),
            "-t",
            &scenario("template.json"),
            "-o",
            target.to_str().unwrap(),
        ]);
        ensure!(
            code(&o) == 0,
            "assemble v{v} exited {}: {}",
            code(&o),
            String::from_utf8_lossy(&o.stderr)
        );
        let assembled = std::fs::read(&target).unwrap();
        let expected = std::fs::read(scenario(&format!("card-v{v}.hasc.json"))).unwrap();
        ensure!(assembled == expected, "assembled v{v} differs from the scenario card");
    }

    let (v12, v13) = (scenario("card-v1.2.hasc.json"), scenario("card-v1.3.hasc.json"));
    let o = hasc(&["diff", &v12, &v13, "--format", "json"]);
    ensure!(code(&o) == 0, "diff exited {}", code(&o));
    let d: Value = serde_json::from_str(&stdout(&o)).map_err(|e| e.to_string())?;
    ensure!(
        d["diff"]["hazards_added"] == json!(["ASH-2025-0142"]),
        "hazards_added = {}",
        d["diff"]["hazards_added"]
    );
    ensure!(
        d["diff"]["guardrail_changes"]
            == json!([{"name": "Medical query safety check", "old_version": "2.0.3", "new_version": "2.1.0"}]),
        "guardrail_changes = {}",
        d["diff"]["guardrail_changes"]
    );
    let changed: Vec<&str> = d["diff"]["changed"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|c| c["path"].as_str())
        .collect();
    ensure!(
        changed.contains(&"blueprint.system_prompt_doc"),
        "system prompt change missing: {changed:?}"
    );

    let o = hasc(&["changelog", &v12, &v13, "--version", "v1.3", "--date", "2025-07-23"]);
    ensure!(code(&o) == 0, "changelog exited {}", code(&o));
    let log = stdout(&o);
    for label in [
        "**Change type:**",
        "**Associated hazard(s):**",
        "**Summary of changes:**",
        "**Affected components:**",
        "**Linked incident report:**",
    ] {
        ensure!(log.contains(label), "changelog lacks {label}:\n{log}");
    }
    ensure!(
        log.contains("**Change type:** Minor (safety enhancement)"),
        "classification missing:\n{log}"
    );
    ensure!(
        log.contains("v1.3 (Current) - Published 2025-07-23"),
        "entry header missing:\n{log}"
    );
    Ok(())
}

fn malformed_ids() -> Vec<&'static str> {
    vec![
        "",
        "ASH",
        "ASH-2025",
        "ASH-2025-",
        "-2025-0023",
        "ASH-2025-23",
        "ASH-2025-023",
        "ASH-2025-00023",
        "ash-2025-0023",
        "Ash-2025-0023",
        "ASH_2025_0023",
        "ASH-25-0023",
        "ASH-20250-0023",
        "ASH-2025-0023 ",
        " ASH-2025-0023",
        "ASH-2025-abcd",
        "ASH-2025-12a4",
        "ASH--2025-0023",
        "ASH-2025--0023",
        "ASH-2025-0023-1",
        "ASH 2025 0023",
        "ASH-２０２５-0023",
        "AS H-2025-0023",
        "ASH-2025-+023",
        "ASH-2025-0000",
        "1ASH-2025-0023",
        "ASH-2025-0x1F",
    ]
}

fn identifier_suite() -> Check {
    let mut rng = rng(0x1d5);
    for i in 0..10_000 {
        let id = random_id(&mut rng);
        let text = format_hazard_id(&id);
        let back = parse_hazard_id(&text).map_err(|e| format!("case {i}: {text}: {e}"))?;
        ensure!(
            back == id && format_hazard_id(&back) == text,
            "case {i}: {text} is not a bijection"
        );
    }
    for raw in ["ASH-2025-0023", "ASH-2025-0142"] {
        let id = parse_hazard_id(raw).map_err(|e| e.to_string())?;
        ensure!(
            id.as_str() == raw && format_hazard_id(&id) == raw,
            "{raw} did not round-trip"
        );
    }
    let now = chrono::Utc::now();
    let reg = IdRegistry::new("acceptance")
        .record("ASH-2025-0142".parse::<HazardId>().unwrap(), "seed", now)
        .map_err(|e| e.to_string())?;
    let (next, _) = reg.allocate_at(2025, "next", now).map_err(|e| e.to_string())?;
    ensure!(next.as_str() == "ASH-2025-0143", "allocated {next}");
    let corpus = malformed_ids();
    ensure!(corpus.len() >= 20, "corpus too small");
    for bad in corpus {
        ensure!(
            matches!(parse_hazard_id(bad), Err(IdError::BadFormat { .. })),
            "`{bad}` was not rejected with BAD_FORMAT: {:?}",
            parse_hazard_id(bad)
        );
    }
    Ok(())
}

fn minimal_card() -> Value {
    json!({
        "card_id": "gate-probe",
        "version": "v1.1",
        "published": "2025-05-01",
        "blueprint": {
            "architecture_summary": "single model behind a gateway",
            "components": [{"name": "core", "kind": "model"}],
            "models": [{"name": "core", "version": "core-1", "sbom_link": "https://x.example/sbom", "provenance_link": "https://x.example/prov"}]
        },
        "intent": {"intended_uses": ["search"]},
        "hazard_log": [{
            "id": "ASH-2025-0001", "title": "probe", "category": "safety",
            "status": "mitigated", "mitigations": ["filter"], "discovered": "2025-04-01"
        }],
        "guardrails": [{"name": "filter", "version": "1.2.0", "mechanism": "output filter"}],
        "remediation_link": "https://x.example/fixed",
        "history": [{"version": "v1.1", "published": "2025-05-01", "change_type": "major", "change_label": "initial release"}],
        "governance": {"security_contact": "sec@x.example"}
    })
}

fn card(tree: Value) -> SystemCard {
    from_tree(tree).expect("probe card is valid")
}

fn gate_truth_table() -> Check {
    let today = chrono::NaiveDate::from_ymd_opt(2025, 8, 1).unwrap();
    let policies = builtin_policies();
    let base = minimal_card();

    let mut no_contact = base.clone();
    no_contact["governance"] = json!({});
    let mut open_bare = base.clone();
    open_bare["hazard_log"][0]["status"] = json!("open");
    open_bare["hazard_log"][0]["mitigations"] = json!([]);
    let mut open_mitigated = base.clone();
    open_mitigated["hazard_log"][0]["status"] = json!("open");
    let mut older = base.clone();
    older["guardrails"][0]["version"] = json!("1.1.9");
    let mut newer = base.clone();
    newer["guardrails"][0]["version"] = json!("1.10.0");
    let prev = card(base.clone());

    let cases: [(&str, Value, bool); 6] = [
        ("no-missing-contact", no_contact, true),
        ("no-missing-contact", base.clone(), false),
        ("hazard-without-mitigation", open_bare, true),
        ("hazard-without-mitigation", open_mitigated, false),
        ("guardrail-version-regression", older, true),
        ("guardrail-version-regression", newer, false),
    ];
    for (rule, tree, fires) in cases {
        let v = evaluate_at(&policies, &card(tree), Some(&prev), today).map_err(|e| e.to_string())?;
        let expected = if fires { Outcome::Block } else { Outcome::Pass };
        ensure!(v.outcome == expected, "{rule} (fires={fires}): got {v:?}");
        ensure!(
            v.fired_rule(rule).is_some() == fires,
            "{rule} (fires={fires}): fired {:?}",
            v.fired
        );
    }

    let mut rng = rng(0x9a7e);
    // Fired/not-fired counts per rule, to catch a generator that never
    // exercises one side.
    let mut seen = [[0usize; 2]; 3];
    for i in 0..200 {
        let c = random_card(&mut rng);
        let prev = if i % 4 == 0 {
            None
        } else {
            Some(random_prev(&c, &mut rng))
        };
        let v = evaluate_at(&policies, &c, prev.as_ref(), today).map_err(|e| format!("card {i}: {e}"))?;
        let fired = |name: &str| v.fired_rule(name).map(|f| f.severity);
        ensure!(
            (fired("no-missing-contact") == Some(RuleSeverity::Block)) == oracle_missing_contact(&c),
            "card {i}: contact rule disagrees"
        );
        ensure!(
            (fired("hazard-without-mitigation") == Some(RuleSeverity::Block)) == oracle_unmitigated_open(&c),
            "card {i}: mitigation rule disagrees"
        );
        let regression = match &prev {
            None => fired("guardrail-version-regression") == Some(RuleSeverity::Warn),
            Some(p) => {
                (fired("guardrail-version-regression") == Some(RuleSeverity::Block))
                    == oracle_guardrail_regression(&c, p)
            }
        };
        ensure!(regression, "card {i}: regression rule disagrees");
        seen[0][usize::from(oracle_missing_contact(&c))] += 1;
        seen[1][usize::from(oracle_unmitigated_open(&c))] += 1;
        if let Some(p) = &prev {
            seen[2][usize::from(oracle_guardrail_regression(&c, p))] += 1;
        }
    }
    ensure!(
        seen.iter().flatten().all(|n| *n >= 10),
        "random cards cover too few cases: {seen:?}"
    );
    Ok(())
}

fn round_trip_properties() -> Check {
    let mut rng = rng(0xc0de);
    for i in 0..500 {
        let c = random_card(&mut rng);
        let from_json = parse_card(&serialize(&c, Format::Json), Format::Json).map_err(|e| format!("card {i}: {e}"))?;
        let from_yaml = parse_card(&serialize(&c, Format::Yaml), Format::Yaml).map_err(|e| format!("card {i}: {e}"))?;
        ensure!(from_json == c, "card {i}: json round trip changed the card");
        ensure!(from_yaml == c, "card {i}: yaml round trip changed the card");
        ensure!(
            canonicalize(&from_json).unwrap() == canonicalize(&from_yaml).unwrap(),
            "card {i}: yaml and json digests differ"
        );
    }
    for i in 0..500 {
        let [a, b, c] = fragment_triple(&mut rng);
        ensure!(
            merge_pair(&a, &a).map_err(|e| e.to_string())? == a,
            "triple {i}: merge is not idempotent"
        );
        let left = merge_pair(&merge_pair(&a, &b).unwrap(), &c).map_err(|e| format!("triple {i}: {e}"))?;
        let right = merge_pair(&a, &merge_pair(&b, &c).unwrap()).map_err(|e| format!("triple {i}: {e}"))?;
        ensure!(left == right, "triple {i}: merge is not associative");
    }
    for i in 0..200 {
        let a = random_card(&mut rng);
        let edits = 1 + i % 5;
        let b = mutate(&a, &mut rng, edits);
        let d = diff_cards(&a, &b).map_err(|e| e.to_string())?;
        let patched = apply_diff(&to_tree(&a), &d).map_err(|e| format!("pair {i}: {e}"))?;
        ensure!(
            patched == to_tree(&b),
            "pair {i}: patch oracle failed after {edits} edit(s)"
        );
    }
    Ok(())
}

fn attestation() -> Check {
    let mut rng = rng(0xa77e);
    let key = ed25519_dalek::SigningKey::generate(&mut rng);
    let c = fixture("scenario/card-v1.3.hasc.json");
    let att = attest::sign(&c, &key).map_err(|e| e.to_string())?;
    let v = attest::verify(&c, &att, &key.verifying_key());
    ensure!(v.verified && v.reason == VerifyReason::Ok, "round trip failed: {v:?}");
    for i in 0..100 {
        let base = if i % 2 == 0 { c.clone() } else { random_card(&mut rng) };
        let att = attest::sign(&base, &key).map_err(|e| e.to_string())?;
        let m = mutate_once(&base, &mut rng);
        let v = attest::verify(&m, &att, &key.verifying_key());
        ensure!(v.reason == VerifyReason::DigestMismatch, "mutation {i}: {v:?}");
    }
    let empty = sha256_hex(b"{}");
    ensure!(
        empty == "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a",
        "sha-256 of {{}} is {empty}"
    );
    Ok(())
}

fn serve_root(cards: &[&str]) -> (tempfile::TempDir, distribution::Server) {
    let root = tempfile::tempdir().unwrap();
    for c in cards {
        publish(root.path(), &fixture(&format!("scenario/{c}")), None, None).unwrap();
    }
    let server = distribution::serve(ServeConfig::new(root.path()).with_addr("127.0.0.1:0")).unwrap();
    (root, server)
}

fn distribution_loop() -> Check {
    let prev = scenario("card-v1.2.hasc.json");
    let (_root, server) = serve_root(&["card-v1.0.hasc.json", "card-v1.2.hasc.json", "card-v1.3.hasc.json"]);
    let url = server.card_url("ai-health-assistant", "latest");
    let result = (|| {
        let o = hasc(&["consume", &url, "--builtin", "--prev", &prev]);
        ensure!(code(&o) == 0, "consume exited {}: {}", code(&o), stdout(&o));

        let html = distribution::fetch_html(&url).map_err(|e| e.to_string())?;
        ensure!(
            html.contains("id=\"hazard-ASH-2025-0142\""),
            "html lacks the hazard anchor"
        );

        let fetched = distribution::fetch(&url).map_err(|e| e.to_string())?;
        let local = attest::digest(&redact_public(&fixture("scenario/card-v1.3.hasc.json")).unwrap()).unwrap();
        ensure!(
            fetched.digest_header.as_deref() == Some(local.as_str()),
            "digest header {:?} != {local}",
            fetched.digest_header
        );
        Ok(())
    })();
    server.shutdown();
    result?;

    let (_root, server) = serve_root(&["card-v1.3-no-contact.hasc.json"]);
    let url = server.card_url("ai-health-assistant", "latest");
    let o = hasc(&["consume", &url, "--builtin", "--prev", &prev]);
    server.shutdown();
    ensure!(code(&o) == 1, "contact-less consume exited {}", code(&o));
    Ok(())
}

fn inventory() -> Check {
    let fleet = fixture_path("fleet");
    let o = hasc(&[
        "inventory",
        fleet.to_str().unwrap(),
        "--stale-days",
        "180",
        "--today",
        "2025-08-01",
        "--format",
        "json",
    ]);
    ensure!(code(&o) == 0, "inventory exited {}", code(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).map_err(|e| e.to_string())?;
    let t = &r["totals"];
    ensure!(t["loaded"] == 5, "loaded = {}", t["loaded"]);
    ensure!(t["stale"] == 2, "stale = {}", t["stale"]);
    ensure!(
        t["cards_with_missing_references"] == 1,
        "dangling = {}",
        t["cards_with_missing_references"]
    );
    Ok(())
}

struct Criterion {
    name: &'static str,
    run: fn() -> Check,
    budget: Option<Duration>,
}

fn main() {
    let criteria = [
        Criterion {
            name: "1 scenario reproduction",
            run: scenario_reproduction,
            budget: Some(Duration::from_secs(1)),
        },
        Criterion {
            name: "2 identifier suite",
            run: identifier_suite,
            budget: None,
        },
        Criterion {
            name: "3 builtin gate truth table",
            run: gate_truth_table,
            budget: None,
        },
        Criterion {
            name: "4 round-trip and canonical properties",
            run: round_trip_properties,
            budget: Some(Duration::from_secs(60)),
        },
        Criterion {
            name: "5 attestation",
            run: attestation,
            budget: None,
        },
        Criterion {
            name: "6 distribution loop",
            run: distribution_loop,
            budget: None,
        },
        Criterion {
            name: "7 inventory",
            run: inventory,
            budget: None,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(()), Some(b)) if took > b => Err(format!("took {took:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(()) => println!("PASS  criterion {} ({took:.2?})", c.name),
            Err(e) => {
                failed += 1;
                println!("FAIL  criterion {} ({took:.2?}): {e}", c.name);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
