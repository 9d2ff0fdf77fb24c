// SPDX-License-Identifier: Apache-2.0

//! Export one exploitability statement per logged hazard as JSON.

use std::path::Path;

use hasc::card::{export_hex, parse_card, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario/card-v1.3.hasc.json");
    let card = parse_card(&std::fs::read(path)?, Format::Json)?;
    println!("{}", serde_json::to_string_pretty(&export_hex(&card))?);
    Ok(())
}
