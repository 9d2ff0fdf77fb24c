// SPDX-License-Identifier: Apache-2.0

//! Merge the build, QE and security fragments of the sample pipeline into a card.

use std::path::{Path, PathBuf};

use hasc::assembly::assemble;
use hasc::card::Format;
use hasc::validation::validate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario");
    let fragments: Vec<PathBuf> = ["build", "qe", "security"]
        .iter()
        .map(|stage| scenario.join(format!("v1.3/{stage}.fragment.yaml")))
        .collect();
    let (card, bytes) = assemble(&fragments, &scenario.join("template.json"), Format::Yaml)?;
    println!("{}", String::from_utf8(bytes)?);
    eprintln!("{} {}: {:?}", card.card_id, card.version, validate(&card).level);
    Ok(())
}
