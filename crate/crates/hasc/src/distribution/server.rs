// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use chrono::{NaiveDate, Utc};
use serde_json::json;
use tiny_http::{Header, Method, Request, Response};

use super::{is_stale, DistributionError, ATTESTATION_FILE, CARD_FILE, PUBLIC_ATTESTATION_FILE, WELL_KNOWN_INDEX};
use crate::attest::{self, Attestation};
use crate::card::{canonicalize, parse_card, redact_public, Format, SystemCard};
use crate::render::{render_html, RenderOptions};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: String,
    pub card_root: PathBuf,
    pub public_only: bool,
    pub staleness_days: u32,
    pub workers: usize,
}

impl ServeConfig {
    pub fn new(card_root: impl Into<PathBuf>) -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            card_root: card_root.into(),
            public_only: true,
            staleness_days: super::DEFAULT_STALENESS_DAYS,
            workers: 4,
        }
    }

    pub fn with_addr(mut self, addr: impl Into<String>) -> Self {
        self.addr = addr.into();
        self
    }
}

struct Entry {
    card: SystemCard,
    bytes: Vec<u8>,
    digest: String,
    html: String,
    attestation: Option<Vec<u8>>,
}

/// An immutable view of the card root. Requests read one snapshot for their
/// whole lifetime; [`Server::reload`] swaps in a new one.
pub struct Snapshot {
    cards: BTreeMap<String, BTreeMap<crate::card::CardVersion, Entry>>,
}

impl Snapshot {
    /// Loads `<root>/<card_id>/<version>/card.hasc.json`. Entries that fail to
    /// parse, disagree with their directory names, or cannot be redacted are
    /// logged and skipped.
    pub fn load(root: &Path, public_only: bool) -> Result<Self, DistributionError> {
        let io = |source| DistributionError::Io {
            path: root.to_path_buf(),
            source,
        };
        let mut cards: BTreeMap<String, BTreeMap<_, Entry>> = BTreeMap::new();
        for id_dir in std::fs::read_dir(root).map_err(io)? {
            let id_dir = id_dir.map_err(io)?.path();
            if !id_dir.is_dir() {
                continue;
            }
            let Ok(versions) = std::fs::read_dir(&id_dir) else {
                log::warn!("{}: unreadable card directory", id_dir.display());
                continue;
            };
            for v_dir in versions.flatten() {
                let dir = v_dir.path();
                let file = dir.join(CARD_FILE);
                if !file.is_file() {
                    continue;
                }
                match load_entry(&dir, public_only) {
                    Ok(e) => {
                        cards
                            .entry(e.card.card_id.clone())
                            .or_default()
                            .insert(e.card.version, e);
                    }
                    Err(msg) => log::warn!("{}: not served: {msg}", file.display()),
                }
            }
        }
        Ok(Self { cards })
    }

    pub fn card_ids(&self) -> impl Iterator<Item = &str> {
        self.cards.keys().map(String::as_str)
    }

    fn latest(&self, id: &str) -> Option<&Entry> {
        self.cards.get(id)?.values().next_back()
    }

    fn lookup(&self, id: &str, version: &str) -> Option<&Entry> {
        if version == "latest" {
            return self.latest(id);
        }
        self.cards.get(id)?.get(&version.parse().ok()?)
    }

    fn index(&self, today: NaiveDate, staleness_days: u32) -> serde_json::Value {
        let rows: Vec<_> = self
            .cards
            .iter()
            .filter_map(|(id, versions)| {
                let e = versions.values().next_back()?;
                Some(json!({
                    "card_id": id,
                    "latest_version": e.card.version,
                    "url": format!("/cards/{id}/{}", e.card.version),
                    "digest": e.digest,
                    "published": e.card.published,
                    "stale": is_stale(e.card.published, today, staleness_days),
                }))
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

fn load_entry(dir: &Path, public_only: bool) -> Result<Entry, String> {
    let raw = std::fs::read(dir.join(CARD_FILE)).map_err(|e| e.to_string())?;
    let stored = parse_card(&raw, Format::Json).map_err(|e| e.to_string())?;
    let dir_version = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let dir_id = dir
        .parent()
        .and_then(Path::file_name)
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    if dir_id != stored.card_id || dir_version.parse().ok() != Some(stored.version) {
        return Err(format!(
            "card {} {} is stored under {dir_id}/{dir_version}",
            stored.card_id, stored.version
        ));
    }
    let (card, opts) = if public_only {
        (
            redact_public(&stored).map_err(|e| e.to_string())?,
            RenderOptions::default(),
        )
    } else {
        (stored, RenderOptions::internal())
    };
    let bytes = canonicalize(&card).map_err(|e| e.to_string())?;
    let digest = crate::canonical::sha256_hex(&bytes);
    let html = render_html(&card, opts).map_err(|e| e.to_string())?;

    // Only serve an attestation that covers the exact bytes being served.
    let candidates: &[&str] = if public_only {
        &[PUBLIC_ATTESTATION_FILE, ATTESTATION_FILE]
    } else {
        &[ATTESTATION_FILE]
    };
    let attestation = candidates.iter().find_map(|name| {
        let raw = std::fs::read(dir.join(name)).ok()?;
        match Attestation::from_json(&raw) {
            Ok(a) if a.digest == digest => Some(raw),
            Ok(_) => None,
            Err(e) => {
                log::warn!("{}: {e}", dir.join(name).display());
                None
            }
        }
    });
    Ok(Entry {
        card,
        bytes,
        digest,
        html,
        attestation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Repr {
    Json,
    Html,
}

/// Picks a representation from an Accept header. Missing header means JSON;
/// equal preference favours JSON.
fn negotiate(accept: Option<&str>) -> Option<Repr> {
    let Some(accept) = accept.filter(|a| !a.trim().is_empty()) else {
        return Some(Repr::Json);
    };
    let ranges: Vec<(String, f32)> = accept
        .split(',')
        .map(|r| {
            let mut parts = r.split(';');
            let media = parts.next().unwrap_or("").trim().to_ascii_lowercase();
            let q = parts
                .filter_map(|p| p.trim().strip_prefix("q="))
                .find_map(|q| q.trim().parse::<f32>().ok())
                .unwrap_or(1.0);
            (media, q)
        })
        .collect();
    let quality = |ty: &str, sub: &str| {
        let mut best: Option<(u8, f32)> = None;
        for (media, q) in &ranges {
            let specificity = match media.split_once('/') {
                Some((t, s)) if t == ty && s == sub => 2,
                Some((t, "*")) if t == ty => 1,
                Some(("*", "*")) => 0,
                _ => continue,
            };
            if best.is_none_or(|(s, _)| specificity > s) {
                best = Some((specificity, *q));
            }
        }
        best.map_or(0.0, |(_, q)| q)
    };
    let json = quality("application", "json");
    let html = quality("text", "html");
    if json <= 0.0 && html <= 0.0 {
        None
    } else if html > json {
        Some(Repr::Html)
    } else {
        Some(Repr::Json)
    }
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static header names are valid")
}

type Reply = Response<Cursor<Vec<u8>>>;

fn json_reply(status: u16, body: &serde_json::Value) -> Reply {
    let mut bytes = serde_json::to_vec_pretty(body).expect("json values serialize");
    bytes.push(b'\n');
    Response::from_data(bytes)
        .with_status_code(status)
        .with_header(header("Content-Type", "application/json"))
}

fn error_reply(status: u16, message: &str) -> Reply {
    json_reply(status, &json!({ "error": message }))
}

fn with_digest(resp: Reply, digest: &str) -> Reply {
    resp.with_header(header("ETag", &format!("\"{digest}\"")))
        .with_header(header(super::DIGEST_HEADER, digest))
}

fn route(snapshot: &Snapshot, cfg: &ServeConfig, method: &Method, url: &str, accept: Option<&str>) -> Reply {
    if !matches!(method, Method::Get | Method::Head) {
        return error_reply(405, "only GET is supported");
    }
    let path = url.split(['?', '#']).next().unwrap_or("");
    if path == WELL_KNOWN_INDEX {
        return json_reply(200, &snapshot.index(Utc::now().date_naive(), cfg.staleness_days));
    }
    let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
    match parts.as_slice() {
        ["cards", id, version] => {
            let Some(e) = snapshot.lookup(id, version) else {
                return error_reply(404, "unknown card or version");
            };
            let resp = match negotiate(accept) {
                Some(Repr::Json) => {
                    Response::from_data(e.bytes.clone()).with_header(header("Content-Type", "application/json"))
                }
                Some(Repr::Html) => Response::from_data(e.html.clone().into_bytes())
                    .with_header(header("Content-Type", "text/html; charset=utf-8")),
                None => return error_reply(406, "supported types: application/json, text/html"),
            };
            with_digest(resp.with_header(header("Vary", "Accept")), &e.digest)
        }
        ["cards", id, version, "attestation"] => match snapshot.lookup(id, version) {
            Some(Entry {
                attestation: Some(att),
                digest,
                ..
            }) => with_digest(
                Response::from_data(att.clone()).with_header(header("Content-Type", "application/json")),
                digest,
            ),
            _ => error_reply(404, "no attestation for this card version"),
        },
        _ => error_reply(404, "not found"),
    }
}

fn handle(req: Request, state: &RwLock<Arc<Snapshot>>, cfg: &ServeConfig) {
    let snapshot = Arc::clone(&state.read().expect("snapshot lock poisoned"));
    let accept = req
        .headers()
        .iter()
        .find(|h| h.field.equiv("Accept"))
        .map(|h| h.value.as_str().to_string());
    let resp = route(&snapshot, cfg, req.method(), req.url(), accept.as_deref());
    log::debug!("{} {} -> {}", req.method(), req.url(), resp.status_code().0);
    if let Err(e) = req.respond(resp) {
        log::debug!("client went away: {e}");
    }
}

/// A running card server. Dropping it without [`Server::shutdown`] leaves the
/// worker threads running until the process exits.
pub struct Server {
    http: Arc<tiny_http::Server>,
    state: Arc<RwLock<Arc<Snapshot>>>,
    config: Arc<ServeConfig>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

/// Loads the card root and starts serving it on `config.addr`.
pub fn serve(config: ServeConfig) -> Result<Server, DistributionError> {
    let snapshot = Snapshot::load(&config.card_root, config.public_only)?;
    let http = tiny_http::Server::http(&config.addr).map_err(|e| DistributionError::Bind {
        addr: config.addr.clone(),
        message: e.to_string(),
    })?;
    let addr = http.server_addr().to_ip().ok_or_else(|| DistributionError::Bind {
        addr: config.addr.clone(),
        message: "not an IP listener".into(),
    })?;
    let http = Arc::new(http);
    let state = Arc::new(RwLock::new(Arc::new(snapshot)));
    let config = Arc::new(config);
    let workers = (0..config.workers.max(1))
        .map(|_| {
            let (http, state, config) = (Arc::clone(&http), Arc::clone(&state), Arc::clone(&config));
            std::thread::spawn(move || {
                while let Ok(req) = http.recv() {
                    handle(req, &state, &config);
                }
            })
        })
        .collect();
    log::info!("serving {} on http://{addr}", config.card_root.display());
    Ok(Server {
        http,
        state,
        config,
        addr,
        workers,
    })
}

impl Server {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn card_url(&self, card_id: &str, version: &str) -> String {
        format!("{}/cards/{card_id}/{version}", self.base_url())
    }

    /// Re-reads the card root and swaps the snapshot. In-flight requests
    /// finish against the snapshot they started with.
    pub fn reload(&self) -> Result<(), DistributionError> {
        let fresh = Snapshot::load(&self.config.card_root, self.config.public_only)?;
        *self.state.write().expect("snapshot lock poisoned") = Arc::new(fresh);
        Ok(())
    }

    /// Blocks until the server is shut down from another thread.
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    pub fn shutdown(mut self) {
        for _ in &self.workers {
            self.http.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Writes a card (and optionally its attestation) into the served layout.
/// When `public_attestation` is set it is stored as the attestation for the
/// redacted variant.
pub fn publish(
    root: &Path,
    card: &SystemCard,
    attestation: Option<&Attestation>,
    public_attestation: Option<&Attestation>,
) -> Result<PathBuf, DistributionError> {
    let dir = root.join(&card.card_id).join(card.version.to_string());
    let io = |source| DistributionError::Io {
        path: dir.clone(),
        source,
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let bytes = crate::card::serialize(card, Format::Json);
    std::fs::write(dir.join(CARD_FILE), bytes).map_err(io)?;
    if let Some(a) = attestation {
        std::fs::write(dir.join(ATTESTATION_FILE), a.to_json()).map_err(io)?;
    }
    if let Some(a) = public_attestation {
        std::fs::write(dir.join(PUBLIC_ATTESTATION_FILE), a.to_json()).map_err(io)?;
    }
    Ok(dir)
}

/// Digest of the bytes a server with the given mode would serve for `card`.
pub fn served_digest(card: &SystemCard, public_only: bool) -> Result<String, DistributionError> {
    let served = if public_only {
        redact_public(card).map_err(|e| DistributionError::Card(e.to_string()))?
    } else {
        card.clone()
    };
    attest::digest(&served).map_err(|e| DistributionError::Card(e.to_string()))
}
