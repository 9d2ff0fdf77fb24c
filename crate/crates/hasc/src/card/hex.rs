// SPDX-License-Identifier: Apache-2.0

//! Hazard exchange (HeX) statements: per-hazard status assertions modeled
//! on VEX, exported as a `.hex.json` array.

use chrono::{DateTime, FixedOffset, NaiveTime};
use serde::{Deserialize, Serialize};

use super::{HazardEntry, HazardStatus, SystemCard};
use crate::ids::HazardId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HexStatus {
    NotAffected,
    Affected,
    Fixed,
    UnderInvestigation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexStatement {
    pub hazard: HazardId,
    pub product: String,
    pub status: HexStatus,
    pub statement: String,
    pub issued: DateTime<FixedOffset>,
}

/// One statement per hazard-log entry, issued at the card's publication date
/// (midnight UTC).
pub fn export_hex(card: &SystemCard) -> Vec<HexStatement> {
    let issued = card.published.and_time(NaiveTime::MIN).and_utc().fixed_offset();
    card.hazard_log
        .iter()
        .map(|h| HexStatement {
            hazard: h.id.clone(),
            product: card.card_id.clone(),
            status: hex_status(h.status),
            statement: statement(card, h),
            issued,
        })
        .collect()
}

fn hex_status(s: HazardStatus) -> HexStatus {
    match s {
        HazardStatus::Remediated => HexStatus::Fixed,
        HazardStatus::Mitigated | HazardStatus::Accepted => HexStatus::Affected,
        HazardStatus::Open => HexStatus::UnderInvestigation,
    }
}

fn statement(card: &SystemCard, h: &HazardEntry) -> String {
    match h.status {
        HazardStatus::Remediated => match card.remediations.iter().find(|r| r.id == h.id) {
            Some(r) if r.summary.is_empty() => format!("Fixed in {}.", r.fixed_in),
            Some(r) => format!("Fixed in {}: {}", r.fixed_in, r.summary),
            None => format!("Remediated in {} {}.", card.card_id, card.version),
        },
        HazardStatus::Mitigated => {
            if h.mitigations.is_empty() {
                "Affected; mitigation described in the linked incident report.".to_string()
            } else {
                format!("Affected; mitigated by {}.", h.mitigations.join(", "))
            }
        }
        HazardStatus::Accepted => "Affected; risk accepted by the system owner.".to_string(),
        HazardStatus::Open => "Under investigation.".to_string(),
    }
}
