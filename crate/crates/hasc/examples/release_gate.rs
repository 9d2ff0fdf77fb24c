// SPDX-License-Identifier: Apache-2.0

//! Gate a release with the built-in policies plus one custom rule.

use std::path::Path;

use hasc::card::{parse_card, Format, SystemCard};
use hasc::policy::{builtin_policies, evaluate, parse_policy};

const EXTRA: &str = r#"
rule no-open-security block {
  when any(card.hazard_log, h -> h.category == "security" and h.status == "open");
  message "open security hazard at {path}";
}
"#;

fn load(name: &str) -> SystemCard {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/scenario")
        .join(name);
    parse_card(&std::fs::read(path).expect("fixture exists"), Format::Json).expect("fixture parses")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut policies = builtin_policies();
    policies.rules.extend(parse_policy(EXTRA)?.rules);
    let prev = load("card-v1.2.hasc.json");

    for name in ["card-v1.3.hasc.json", "card-v1.3-no-contact.hasc.json"] {
        let verdict = evaluate(&policies, &load(name), Some(&prev))?;
        println!("{name}: {:?}", verdict.outcome);
        for fired in &verdict.fired {
            println!("  {} ({:?}): {}", fired.rule, fired.severity, fired.message);
        }
    }
    Ok(())
}
