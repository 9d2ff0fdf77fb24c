// SPDX-License-Identifier: Apache-2.0

//! Diff two card versions and draft the changelog entry for the newer one.

use std::path::Path;

use hasc::card::{parse_card, Format, SystemCard};
use hasc::diff::{classify_change, diff_cards, make_changelog_entry};
use hasc::render::render_changelog;

fn load(name: &str) -> SystemCard {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/scenario")
        .join(name);
    parse_card(&std::fs::read(path).expect("fixture exists"), Format::Json).expect("fixture parses")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (old, new) = (load("card-v1.2.hasc.json"), load("card-v1.3.hasc.json"));
    let diff = diff_cards(&old, &new)?;
    println!("{} changed path(s)", diff.paths().count());
    for p in diff.paths() {
        println!("  {p}");
    }
    let class = classify_change(&diff);
    println!("classification: {:?} ({})", class.change_type, class.label);

    let entry = make_changelog_entry(&diff, new.version, new.published, None);
    println!("\n{}", render_changelog(&[entry]));
    Ok(())
}
