// SPDX-License-Identifier: Apache-2.0

//! Detached ed25519 attestations over a card's canonical digest.
//!
//! The signed message is `hasc-attestation-v1:` followed by the lowercase hex
//! SHA-256 digest of the canonical card bytes.

use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, SubsecRound, Utc};
use ed25519_dalek::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::sha256_hex;
use crate::card::{canonicalize, CardError, CardVersion, SystemCard};

pub const CONTEXT: &str = "hasc-attestation-v1:";
pub const DIGEST_ALG: &str = "sha-256";
pub const SIG_ALG: &str = "ed25519";

#[derive(Debug, Error)]
pub enum AttestError {
    #[error("KEY_INVALID: {0}")]
    KeyInvalid(String),
    #[error("attestation is malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Card(#[from] CardError),
    #[error("IO: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attestation {
    pub card_id: String,
    pub version: CardVersion,
    pub digest_alg: String,
    pub digest: String,
    pub sig_alg: String,
    pub signature: String,
    pub signer: String,
    pub issued: DateTime<Utc>,
}

impl Attestation {
    pub fn from_json(bytes: &[u8]) -> Result<Self, AttestError> {
        let a: Attestation = serde_json::from_slice(bytes).map_err(|e| AttestError::Malformed(e.to_string()))?;
        if a.digest.len() != 64
            || !a
                .digest
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        {
            return Err(AttestError::Malformed(
                "digest must be 64 lowercase hex characters".into(),
            ));
        }
        Ok(a)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("attestation serializes");
        v.push(b'\n');
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerifyReason {
    Ok,
    DigestMismatch,
    SigInvalid,
    VersionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub verified: bool,
    pub reason: VerifyReason,
}

impl Verification {
    fn fail(reason: VerifyReason) -> Self {
        Self {
            verified: false,
            reason,
        }
    }
}

/// SHA-256 of the canonical card bytes, lowercase hex.
pub fn digest(card: &SystemCard) -> Result<String, CardError> {
    Ok(sha256_hex(&canonicalize(card)?))
}

fn message(digest: &str) -> Vec<u8> {
    format!("{CONTEXT}{digest}").into_bytes()
}

/// `ed25519:` followed by the first 16 hex digits of SHA-256 over the raw
/// public key.
pub fn signer_id(key: &VerifyingKey) -> String {
    format!("ed25519:{}", &sha256_hex(key.as_bytes())[..16])
}

pub fn sign(card: &SystemCard, key: &SigningKey) -> Result<Attestation, AttestError> {
    sign_at(card, key, Utc::now().trunc_subsecs(0))
}

pub fn sign_at(card: &SystemCard, key: &SigningKey, issued: DateTime<Utc>) -> Result<Attestation, AttestError> {
    let digest = digest(card)?;
    let sig = key.sign(&message(&digest));
    Ok(Attestation {
        card_id: card.card_id.clone(),
        version: card.version,
        digest_alg: DIGEST_ALG.into(),
        digest,
        sig_alg: SIG_ALG.into(),
        signature: B64.encode(sig.to_bytes()),
        signer: signer_id(&key.verifying_key()),
        issued,
    })
}

/// Checks, in order: the card digest, the signature, and that the
/// attestation names this card and version.
pub fn verify(card: &SystemCard, att: &Attestation, key: &VerifyingKey) -> Verification {
    match digest(card) {
        Ok(d) if att.digest_alg == DIGEST_ALG && d == att.digest => {}
        _ => return Verification::fail(VerifyReason::DigestMismatch),
    }
    let sig = B64
        .decode(&att.signature)
        .ok()
        .and_then(|b| Signature::from_slice(&b).ok());
    match sig {
        Some(sig) if att.sig_alg == SIG_ALG && key.verify(&message(&att.digest), &sig).is_ok() => {}
        _ => return Verification::fail(VerifyReason::SigInvalid),
    }
    if att.version != card.version || att.card_id != card.card_id {
        return Verification::fail(VerifyReason::VersionMismatch);
    }
    Verification {
        verified: true,
        reason: VerifyReason::Ok,
    }
}

pub fn generate_key() -> SigningKey {
    SigningKey::generate(&mut rand::rngs::OsRng)
}

pub fn signing_key_from_pem(pem: &str) -> Result<SigningKey, AttestError> {
    SigningKey::from_pkcs8_pem(pem).map_err(|e| AttestError::KeyInvalid(e.to_string()))
}

pub fn verifying_key_from_pem(pem: &str) -> Result<VerifyingKey, AttestError> {
    VerifyingKey::from_public_key_pem(pem).map_err(|e| AttestError::KeyInvalid(e.to_string()))
}

pub fn signing_key_to_pem(key: &SigningKey) -> String {
    key.to_pkcs8_pem(Default::default())
        .expect("ed25519 keys encode as PKCS#8")
        .to_string()
}

pub fn verifying_key_to_pem(key: &VerifyingKey) -> String {
    key.to_public_key_pem(Default::default())
        .expect("ed25519 keys encode as SPKI")
}

fn read_string(path: &Path) -> Result<String, AttestError> {
    std::fs::read_to_string(path).map_err(|source| AttestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_signing_key(path: &Path) -> Result<SigningKey, AttestError> {
    signing_key_from_pem(&read_string(path)?)
}

pub fn load_verifying_key(path: &Path) -> Result<VerifyingKey, AttestError> {
    verifying_key_from_pem(&read_string(path)?)
}

/// `card.hasc.json` becomes `card.hasc.att.json`; other names get
/// `.att.json` appended.
pub fn attestation_path(card_path: &Path) -> PathBuf {
    let name = card_path.file_name().and_then(|n| n.to_str()).unwrap_or("card");
    let att = match name.strip_suffix(".json") {
        Some(stem) if stem.ends_with(".hasc") => format!("{stem}.att.json"),
        _ => format!("{name}.att.json"),
    };
    card_path.with_file_name(att)
}
