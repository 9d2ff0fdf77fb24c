// SPDX-License-Identifier: Apache-2.0

use std::io::Read;
use std::time::Duration;

use ed25519_dalek::VerifyingKey;

use super::{FetchError, DIGEST_HEADER};
use crate::attest::{self, Attestation};
use crate::card::{parse_card_unchecked, Format, SystemCard};
use crate::policy::{evaluate, Fired, Outcome, PolicySet, RuleSeverity, Verdict};
use crate::validation::{validate, Level, ValidationReport};

/// Upper bound on a fetched document.
const MAX_BODY: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct Fetched {
    pub card: SystemCard,
    pub attestation: Option<Attestation>,
    /// Digest the server advertised, if any.
    pub digest_header: Option<String>,
    pub report: ValidationReport,
}

fn agent() -> ureq::Agent {
    ureq::AgentBuilder::new()
        .timeout_connect(Duration::from_secs(5))
        .timeout(Duration::from_secs(30))
        .build()
}

struct Body {
    status: u16,
    digest: Option<String>,
    bytes: Vec<u8>,
}

fn get(agent: &ureq::Agent, url: &str, accept: &str) -> Result<Body, FetchError> {
    let network = |message: String| FetchError::Network {
        url: url.to_string(),
        message,
    };
    let resp = match agent.get(url).set("Accept", accept).call() {
        Ok(r) => r,
        Err(ureq::Error::Status(status, r)) => {
            return Ok(Body {
                status,
                digest: None,
                bytes: read_body(r).unwrap_or_default(),
            })
        }
        Err(e) => return Err(network(e.to_string())),
    };
    let status = resp.status();
    let digest = resp.header(DIGEST_HEADER).map(str::to_string);
    let bytes = read_body(resp).map_err(|e| network(e.to_string()))?;
    Ok(Body { status, digest, bytes })
}

fn read_body(resp: ureq::Response) -> std::io::Result<Vec<u8>> {
    let mut bytes = Vec::new();
    resp.into_reader().take(MAX_BODY).read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn attestation_url(url: &str) -> String {
    let (base, query) = url.split_once('?').map_or((url, ""), |(b, q)| (b, q));
    let mut out = format!("{}/attestation", base.trim_end_matches('/'));
    if !query.is_empty() {
        out.push('?');
        out.push_str(query);
    }
    out
}

/// Downloads a card and, when the sibling `/attestation` endpoint has one,
/// its attestation. The card must parse and pass validation.
pub fn fetch(url: &str) -> Result<Fetched, FetchError> {
    url::Url::parse(url).map_err(|e| FetchError::Network {
        url: url.to_string(),
        message: format!("invalid url: {e}"),
    })?;
    let agent = agent();
    let body = get(&agent, url, "application/json")?;
    if body.status != 200 {
        return Err(FetchError::Network {
            url: url.to_string(),
            message: format!("HTTP {}", body.status),
        });
    }
    let invalid = |message: String, report: Option<ValidationReport>| FetchError::RemoteInvalid {
        url: url.to_string(),
        message,
        report,
    };
    let card = parse_card_unchecked(&body.bytes, Format::Json).map_err(|e| invalid(e.to_string(), None))?;
    let report = validate(&card);
    if report.level == Level::Fail {
        return Err(invalid(
            format!("{} validation error(s)", report.errors()),
            Some(report),
        ));
    }

    let att_url = attestation_url(url);
    let att = get(&agent, &att_url, "application/json")?;
    let attestation = match att.status {
        200 => Some(
            Attestation::from_json(&att.bytes).map_err(|e| FetchError::RemoteInvalid {
                url: att_url.clone(),
                message: e.to_string(),
                report: None,
            })?,
        ),
        404 => None,
        status => {
            return Err(FetchError::Network {
                url: att_url,
                message: format!("HTTP {status}"),
            })
        }
    };
    Ok(Fetched {
        card,
        attestation,
        digest_header: body.digest,
        report,
    })
}

/// Raw JSON bytes from `url`; any non-200 status is a NETWORK error.
pub(crate) fn get_bytes(url: &str) -> Result<Vec<u8>, FetchError> {
    let body = get(&agent(), url, "application/json")?;
    if body.status != 200 {
        return Err(FetchError::Network {
            url: url.to_string(),
            message: format!("HTTP {}", body.status),
        });
    }
    Ok(body.bytes)
}

/// Fetches the HTML rendering of a served card.
pub fn fetch_html(url: &str) -> Result<String, FetchError> {
    let body = get(&agent(), url, "text/html")?;
    if body.status != 200 {
        return Err(FetchError::Network {
            url: url.to_string(),
            message: format!("HTTP {}", body.status),
        });
    }
    String::from_utf8(body.bytes).map_err(|e| FetchError::RemoteInvalid {
        url: url.to_string(),
        message: e.to_string(),
        report: None,
    })
}

pub const ATTESTATION_REQUIRED: &str = "ATTESTATION_REQUIRED";

fn block(rule: &str, message: String) -> Fired {
    Fired {
        rule: rule.to_string(),
        severity: RuleSeverity::Block,
        message,
        witnesses: Vec::new(),
    }
}

/// Fetch, optionally verify, then evaluate. Every failure becomes a blocking
/// entry in the verdict: fetch problems under rule `fetch`, attestation
/// problems under `attestation`, evaluation errors under `policy`.
pub fn consume_and_gate(
    url: &str,
    policies: &PolicySet,
    prev: Option<&SystemCard>,
    pubkey: Option<&VerifyingKey>,
) -> Verdict {
    let fetched = match fetch(url) {
        Ok(f) => f,
        Err(e) => return Verdict::from_fired(vec![block("fetch", e.to_string())]),
    };
    let mut fired = Vec::new();
    if let Some(key) = pubkey {
        match &fetched.attestation {
            None => fired.push(block(
                "attestation",
                format!("{ATTESTATION_REQUIRED}: no attestation published for {url}"),
            )),
            Some(att) => {
                let v = attest::verify(&fetched.card, att, key);
                if !v.verified {
                    let reason = serde_json::to_value(v.reason).expect("reason serializes");
                    fired.push(block("attestation", reason.as_str().unwrap_or_default().to_string()));
                }
            }
        }
    }
    match evaluate(policies, &fetched.card, prev) {
        Ok(v) => fired.extend(v.fired),
        Err(e) => fired.push(block("policy", e.to_string())),
    }
    Verdict::from_fired(fired)
}

/// True when the verdict was blocked by the attestation step.
pub fn attestation_failed(v: &Verdict) -> bool {
    v.outcome == Outcome::Block && v.fired_rule("attestation").is_some()
}
