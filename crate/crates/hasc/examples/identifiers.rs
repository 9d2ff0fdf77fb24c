// SPDX-License-Identifier: Apache-2.0

//! Allocate hazard identifiers from an in-memory registry and parse ids from
//! other schemes.

use hasc::ids::{parse_hazard_id, IdRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = IdRegistry::new("example");
    for summary in ["prompt injection via uploaded PDF", "dosage hallucination"] {
        let (id, next) = registry.allocate(2025, summary)?;
        println!("allocated {id} for {summary:?}");
        registry = next;
    }
    println!("highest 2025 number: {:?}", registry.highest(2025));

    for text in ["CVE-2024-3094", "ASH-2025-0142", "ash-2025-1", "GHSA-xxxx-yyyy-zzzz"] {
        match parse_hazard_id(text) {
            Ok(id) => println!(
                "{text}: scheme {}, year {}, number {}",
                id.scheme().prefix(),
                id.year(),
                id.number()
            ),
            Err(e) => println!("{text}: {e}"),
        }
    }
    Ok(())
}
