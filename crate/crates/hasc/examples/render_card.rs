// SPDX-License-Identifier: Apache-2.0

//! Render the public Markdown card and the end-user summary as HTML.

use std::path::Path;

use hasc::card::{parse_card, Format};
use hasc::render::{render_html, render_markdown, RenderOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario/card-v1.3.hasc.json");
    let card = parse_card(&std::fs::read(path)?, Format::Json)?;

    println!("{}", render_markdown(&card, RenderOptions::default())?);

    let out = std::env::temp_dir().join("hasc-summary.html");
    std::fs::write(&out, render_html(&card, RenderOptions::summary())?)?;
    eprintln!("summary written to {}", out.display());
    Ok(())
}
