// SPDX-License-Identifier: Apache-2.0

//! Validate a card file and print its findings.
//!
//! `cargo run --example validate_card -- path/to/card.hasc.json`

use std::path::PathBuf;

use hasc::card::{parse_card_unchecked, Format};
use hasc::validation::validate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario/card-v1.3-no-contact.hasc.json")
    });
    let card = parse_card_unchecked(&std::fs::read(&path)?, Format::from_path(&path))?;
    let report = validate(&card);
    println!("{}: {:?}", path.display(), report.level);
    for f in &report.findings {
        println!("  {:?} {} {:?}: {}", f.severity, f.path, f.code, f.message);
    }
    Ok(())
}
