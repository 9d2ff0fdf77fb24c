// SPDX-License-Identifier: Apache-2.0

//! Audit the sample fleet for stale cards and missing references.

use std::path::Path;

use chrono::NaiveDate;
use hasc::distribution::{inventory_at, DEFAULT_STALENESS_DAYS};

fn main() {
    let fleet = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fleet");
    let today = NaiveDate::from_ymd_opt(2025, 8, 1).expect("valid date");
    let report = inventory_at(&[fleet.display().to_string()], DEFAULT_STALENESS_DAYS, today);
    println!("{report}");
}
