// SPDX-License-Identifier: Apache-2.0

//! Publish signed cards to a temporary root, serve them, and gate the latest
//! version as a downstream consumer would.

use std::path::Path;

use hasc::attest::{generate_key, sign};
use hasc::card::{parse_card, redact_public, Format, SystemCard};
use hasc::distribution::{consume_and_gate, fetch, publish, serve, ServeConfig};
use hasc::policy::builtin_policies;

fn load(name: &str) -> SystemCard {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/scenario")
        .join(name);
    parse_card(&std::fs::read(path).expect("fixture exists"), Format::Json).expect("fixture parses")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = tempfile::tempdir()?;
    let key = generate_key();
    for name in ["card-v1.2.hasc.json", "card-v1.3.hasc.json"] {
        let card = load(name);
        let public = sign(&redact_public(&card)?, &key)?;
        publish(root.path(), &card, Some(&sign(&card, &key)?), Some(&public))?;
    }

    let server = serve(ServeConfig::new(root.path()).with_addr("127.0.0.1:0"))?;
    println!("serving on {}", server.base_url());

    let latest = server.card_url("ai-health-assistant", "latest");
    let fetched = fetch(&latest)?;
    println!(
        "fetched {} {} digest {}",
        fetched.card.card_id,
        fetched.card.version,
        fetched.digest_header.as_deref().unwrap_or("-")
    );

    let prev = load("card-v1.2.hasc.json");
    let verdict = consume_and_gate(&latest, &builtin_policies(), Some(&prev), Some(&key.verifying_key()));
    println!("verdict: {:?}", verdict.outcome);
    for f in &verdict.fired {
        println!("  {}: {}", f.rule, f.message);
    }
    server.shutdown();
    Ok(())
}
