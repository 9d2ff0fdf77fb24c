// SPDX-License-Identifier: Apache-2.0

//! Organization-scoped ASH allocation registry.
//!
//! The registry file keeps the highest number issued per year plus an
//! append-only journal. Each journal entry carries the digest of its
//! predecessor, so edits or deletions inside the journal are detected on load.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{max_year, HazardId, IdError, Scheme, MIN_YEAR};
use crate::canonical::{sha256_hex, to_canonical_bytes};

const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("IO: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CORRUPT_JOURNAL: {0}")]
    CorruptJournal(String),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error("identifier {0} is already recorded")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalEntry {
    pub id: HazardId,
    pub issued_at: DateTime<Utc>,
    pub summary: String,
    pub prev_digest: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdRegistry {
    namespace: String,
    allocated: BTreeMap<u16, u32>,
    journal: Vec<JournalEntry>,
}

fn entry_digest(namespace: &str, prev: &str, id: &HazardId, issued_at: &DateTime<Utc>, summary: &str) -> String {
    let body = json!({
        "id": id.as_str(),
        "issued_at": issued_at.to_rfc3339(),
        "namespace": namespace,
        "prev_digest": prev,
        "summary": summary,
    });
    sha256_hex(&to_canonical_bytes(&body).expect("journal body has no floats"))
}

impl IdRegistry {
    pub fn new(namespace: impl Into<String>) -> Self {
        Self {
            namespace: namespace.into(),
            allocated: BTreeMap::new(),
            journal: Vec::new(),
        }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn allocated(&self) -> &BTreeMap<u16, u32> {
        &self.allocated
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn highest(&self, year: u16) -> Option<u32> {
        self.allocated.get(&year).copied()
    }

    /// Issues the next ASH number for `year`.
    pub fn allocate(self, year: i64, summary: &str) -> Result<(HazardId, IdRegistry), RegistryError> {
        self.allocate_at(year, summary, Utc::now())
    }

    pub fn allocate_at(
        self,
        year: i64,
        summary: &str,
        now: DateTime<Utc>,
    ) -> Result<(HazardId, IdRegistry), RegistryError> {
        let ceiling = max_year();
        let year = u16::try_from(year)
            .ok()
            .filter(|y| (MIN_YEAR..=ceiling).contains(y))
            .ok_or(IdError::YearOutOfRange {
                year,
                min: MIN_YEAR,
                max: ceiling,
            })?;
        let next = self.highest(year).unwrap_or(0) + 1;
        let id = HazardId::with_ceiling(Scheme::Ash, year, next, ceiling)?;
        let reg = self.append(id.clone(), summary, now);
        Ok((id, reg))
    }

    /// Records an identifier issued outside this registry, e.g. when seeding
    /// a registry from an existing hazard log.
    pub fn record(self, id: HazardId, summary: &str, now: DateTime<Utc>) -> Result<IdRegistry, RegistryError> {
        if id.scheme() != &Scheme::Ash {
            return Err(IdError::BadFormat {
                input: id.to_string(),
                reason: "the registry allocates ASH identifiers only".into(),
            }
            .into());
        }
        if self.journal.iter().any(|e| e.id == id) {
            return Err(RegistryError::Duplicate(id.to_string()));
        }
        Ok(self.append(id, summary, now))
    }

    fn append(mut self, id: HazardId, summary: &str, now: DateTime<Utc>) -> IdRegistry {
        let prev = self.journal.last().map_or(GENESIS, |e| e.digest.as_str()).to_string();
        let digest = entry_digest(&self.namespace, &prev, &id, &now, summary);
        let slot = self.allocated.entry(id.year()).or_insert(0);
        *slot = (*slot).max(id.number());
        self.journal.push(JournalEntry {
            id,
            issued_at: now,
            summary: summary.to_string(),
            prev_digest: prev,
            digest,
        });
        self
    }

    /// Replays the journal into the allocation map.
    pub fn replay(&self) -> BTreeMap<u16, u32> {
        let mut map = BTreeMap::new();
        for e in &self.journal {
            let slot = map.entry(e.id.year()).or_insert(0);
            *slot = (*slot).max(e.id.number());
        }
        map
    }

    fn check(&self) -> Result<(), RegistryError> {
        let corrupt = |m: String| Err(RegistryError::CorruptJournal(m));
        let mut prev = GENESIS.to_string();
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.journal.iter().enumerate() {
            if e.prev_digest != prev {
                return corrupt(format!("entry {i} ({}) does not chain to its predecessor", e.id));
            }
            let expected = entry_digest(&self.namespace, &prev, &e.id, &e.issued_at, &e.summary);
            if e.digest != expected {
                return corrupt(format!("entry {i} ({}) digest mismatch", e.id));
            }
            if e.id.scheme() != &Scheme::Ash {
                return corrupt(format!("entry {i} holds non-ASH identifier {}", e.id));
            }
            if !seen.insert(e.id.clone()) {
                return corrupt(format!("entry {i} repeats {}", e.id));
            }
            prev = e.digest.clone();
        }
        if self.replay() != self.allocated {
            return corrupt("allocation map disagrees with journal".into());
        }
        Ok(())
    }
}

pub fn load_registry(path: &Path) -> Result<IdRegistry, RegistryError> {
    let bytes = std::fs::read(path).map_err(|source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reg: IdRegistry = serde_json::from_slice(&bytes)
        .map_err(|e| RegistryError::CorruptJournal(format!("{}: {e}", path.display())))?;
    reg.check()?;
    Ok(reg)
}

/// Loads `path`, or returns an empty registry for `namespace` when the file
/// does not exist.
pub fn load_or_create_registry(path: &Path, namespace: &str) -> Result<IdRegistry, RegistryError> {
    match load_registry(path) {
        Err(RegistryError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => {
            Ok(IdRegistry::new(namespace))
        }
        other => other,
    }
}

/// Writes the registry via a temporary file in the same directory and an
/// atomic rename.
pub fn store_registry(registry: &IdRegistry, path: &Path) -> Result<(), RegistryError> {
    let io = |source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    let bytes = serde_json::to_vec_pretty(registry).expect("registry serializes");
    tmp.write_all(&bytes).map_err(io)?;
    tmp.write_all(b"\n").map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
