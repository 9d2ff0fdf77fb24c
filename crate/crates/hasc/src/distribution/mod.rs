// SPDX-License-Identifier: Apache-2.0

//! Serving cards over HTTP, fetching and gating remote cards, and fleet
//! inventory audits.
//!
//! A card root is laid out as `<card_id>/<version>/card.hasc.json`, with
//! optional attestations next to each card: `card.hasc.att.json` covers the
//! stored card and `card.public.hasc.att.json` covers its redacted variant.

mod client;
mod inventory;
mod server;

use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::validation::ValidationReport;

pub use client::{attestation_failed, consume_and_gate, fetch, fetch_html, Fetched, ATTESTATION_REQUIRED};
pub use inventory::{
    inventory, inventory_at, FindingSummary, InventoryReport, InventoryRow, InventoryTotals, RowStatus,
};
pub use server::{publish, serve, served_digest, ServeConfig, Server, Snapshot};

pub const WELL_KNOWN_INDEX: &str = "/.well-known/hasc/index.json";
pub const DIGEST_HEADER: &str = "X-Hasc-Digest";
pub const CARD_FILE: &str = "card.hasc.json";
pub const ATTESTATION_FILE: &str = "card.hasc.att.json";
pub const PUBLIC_ATTESTATION_FILE: &str = "card.public.hasc.att.json";
pub const DEFAULT_STALENESS_DAYS: u32 = 180;

/// Stale means strictly more than `staleness_days` have passed.
pub fn is_stale(published: NaiveDate, today: NaiveDate, staleness_days: u32) -> bool {
    (today - published).num_days() > i64::from(staleness_days)
}

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("IO: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot listen on {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("card: {0}")]
    Card(String),
}

#[derive(Debug, Clone, Error)]
pub enum FetchError {
    #[error("NETWORK: {url}: {message}")]
    Network { url: String, message: String },
    #[error("REMOTE_INVALID: {url}: {message}")]
    RemoteInvalid {
        url: String,
        message: String,
        report: Option<ValidationReport>,
    },
}

impl FetchError {
    pub fn code(&self) -> &'static str {
        match self {
            FetchError::Network { .. } => "NETWORK",
            FetchError::RemoteInvalid { .. } => "REMOTE_INVALID",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{parse_card, Format, SystemCard};
    use crate::policy::{builtin_policies, Outcome};
    use std::path::Path;

    fn fixture(name: &str) -> SystemCard {
        let p = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures/scenario")
            .join(name);
        parse_card(&std::fs::read(p).unwrap(), Format::Json).unwrap()
    }

    fn start(root: &Path, public_only: bool) -> Server {
        let mut cfg = ServeConfig::new(root).with_addr("127.0.0.1:0");
        cfg.public_only = public_only;
        serve(cfg).unwrap()
    }

    fn get(url: &str, accept: &str) -> (u16, Option<String>, String) {
        match ureq::get(url).set("Accept", accept).call() {
            Ok(r) => (
                r.status(),
                r.header(DIGEST_HEADER).map(String::from),
                r.into_string().unwrap(),
            ),
            Err(ureq::Error::Status(s, r)) => (s, None, r.into_string().unwrap()),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn serve_fetch_round_trip() {
        let root = tempfile::tempdir().unwrap();
        for v in ["1.0", "1.2", "1.3"] {
            publish(root.path(), &fixture(&format!("card-v{v}.hasc.json")), None, None).unwrap();
        }
        let v13 = fixture("card-v1.3.hasc.json");
        for public_only in [false, true] {
            let server = start(root.path(), public_only);
            let url = server.card_url("ai-health-assistant", "latest");
            let got = fetch(&url).unwrap();
            let expected = if public_only {
                crate::card::redact_public(&v13).unwrap()
            } else {
                v13.clone()
            };
            assert_eq!(got.card, expected);
            assert_eq!(got.digest_header.unwrap(), served_digest(&v13, public_only).unwrap());
            assert!(got.attestation.is_none());

            let (status, _, html) = get(&url, "text/html");
            assert_eq!(status, 200);
            assert!(html.contains("id=\"hazard-ASH-2025-0142\""));
            assert_eq!(get(&url, "image/png").0, 406);
            assert_eq!(get(&server.card_url("nope", "latest"), "application/json").0, 404);
            assert_eq!(
                get(&server.card_url("ai-health-assistant", "v9.0"), "application/json").0,
                404
            );

            let (status, _, index) = get(&format!("{}{WELL_KNOWN_INDEX}", server.base_url()), "application/json");
            assert_eq!(status, 200);
            let index: serde_json::Value = serde_json::from_str(&index).unwrap();
            assert_eq!(index[0]["card_id"], "ai-health-assistant");
            assert_eq!(index[0]["latest_version"], "v1.3");
            server.shutdown();
        }
    }

    #[test]
    fn malformed_stored_card_is_404() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("broken/v1.0");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join(CARD_FILE), b"{\"card_id\":").unwrap();
        let server = start(root.path(), true);
        assert_eq!(get(&server.card_url("broken", "v1.0"), "application/json").0, 404);
        server.shutdown();
    }

    #[test]
    fn truncated_remote_is_invalid() {
        let root = tempfile::tempdir().unwrap();
        let server = start(root.path(), true);
        let http = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let addr = http.server_addr().to_ip().unwrap();
        let t = std::thread::spawn(move || {
            let req = http.recv().unwrap();
            req.respond(tiny_http::Response::from_string("{\"card_id\": \"x\", \"vers"))
                .unwrap();
        });
        let err = fetch(&format!("http://{addr}/cards/x/latest")).unwrap_err();
        assert_eq!(err.code(), "REMOTE_INVALID");
        t.join().unwrap();
        server.shutdown();
    }

    #[test]
    fn consume_requires_attestation_when_key_given() {
        use rand::SeedableRng;
        let root = tempfile::tempdir().unwrap();
        let v13 = fixture("card-v1.3.hasc.json");
        publish(root.path(), &v13, None, None).unwrap();
        let server = start(root.path(), true);
        let url = server.card_url("ai-health-assistant", "latest");
        let key = ed25519_dalek::SigningKey::generate(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7));
        let prev = fixture("card-v1.2.hasc.json");

        let v = consume_and_gate(&url, &builtin_policies(), Some(&prev), None);
        assert_eq!(v.outcome, Outcome::Pass);
        let v = consume_and_gate(&url, &builtin_policies(), Some(&prev), Some(&key.verifying_key()));
        assert_eq!(v.outcome, Outcome::Block);
        assert!(v
            .fired_rule("attestation")
            .unwrap()
            .message
            .starts_with(ATTESTATION_REQUIRED));

        let public = crate::card::redact_public(&v13).unwrap();
        let att = crate::attest::sign(&public, &key).unwrap();
        publish(root.path(), &v13, None, Some(&att)).unwrap();
        server.reload().unwrap();
        let v = consume_and_gate(&url, &builtin_policies(), Some(&prev), Some(&key.verifying_key()));
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");
        server.shutdown();
    }
}
