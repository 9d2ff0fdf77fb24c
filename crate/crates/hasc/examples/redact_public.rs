// SPDX-License-Identifier: Apache-2.0

//! Produce the public variant of a card and list what was removed.

use std::path::Path;

use hasc::card::{parse_card, redact_public, redaction_count, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario/card-v1.3.hasc.json");
    let card = parse_card(&std::fs::read(path)?, Format::Json)?;
    for (mark, visibility) in &card.visibility_marks {
        println!("{mark}: {visibility:?}");
    }
    let public = redact_public(&card)?;
    println!("removed {} path(s)", redaction_count(&public).unwrap_or(0));
    println!("{}", String::from_utf8(hasc::card::serialize(&public, Format::Yaml))?);
    Ok(())
}
