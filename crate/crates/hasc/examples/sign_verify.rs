// SPDX-License-Identifier: Apache-2.0

//! Sign a card, verify it, then show what tampering looks like.

use std::path::Path;

use hasc::attest::{generate_key, sign, verify, verifying_key_to_pem};
use hasc::card::{parse_card, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenario/card-v1.3.hasc.json");
    let mut card = parse_card(&std::fs::read(path)?, Format::Json)?;

    let key = generate_key();
    print!("{}", verifying_key_to_pem(&key.verifying_key()));
    let att = sign(&card, &key)?;
    println!("{}", String::from_utf8(att.to_json())?);
    println!("untouched: {:?}", verify(&card, &att, &key.verifying_key()).reason);

    card.governance.owner.push_str(" (reorg)");
    println!("after edit: {:?}", verify(&card, &att, &key.verifying_key()).reason);

    let stranger = generate_key();
    let att = sign(&card, &stranger)?;
    println!("wrong key: {:?}", verify(&card, &att, &key.verifying_key()).reason);
    Ok(())
}
