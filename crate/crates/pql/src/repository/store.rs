//! On-disk repository.
//!
//! ```text
//! <root>/VERSION               "pql-store 1"
//! <root>/metadata.jsonl        one JSON record per line (see `MetaRecord`)
//! <root>/models/<id>           PNML exactly as ingested
//! <root>/index/relations.log   relation index (module `index`)
//! <root>/index/claims/<id>     indexing claim, created exclusively by a bot
//! <root>/store.lock            held while mutating metadata or the index log
//! ```
//!
//! Metadata is rewritten through a temporary file and a rename, so readers
//! never observe a partial file and need no lock.

use std::collections::BTreeMap;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime};

use serde::{Deserialize, Serialize};

use super::{normalize_location, validate_id, IndexStatus, RepoError, Repository};
use crate::petri::pnml::read_pnml;

pub const STORE_VERSION: &str = "pql-store 1";

/// A lock older than this is assumed to belong to a crashed process.
const STALE_LOCK: Duration = Duration::from_secs(60);
const LOCK_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum MetaRecord {
    Model {
        id: String,
        location: String,
        status: IndexStatus,
        attributes: BTreeMap<String, String>,
    },
    Location {
        path: String,
    },
    Nesting {
        inner: String,
        outer: String,
    },
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Exclusive hold on the store's mutation lock; released on drop.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Outcome of a claim attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimGuard {
    Claimed,
    Taken,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RepoError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".tmp-{name}-{}", std::process::id()));
    let mut f = fs::File::create(&tmp)
        .map_err(|e| RepoError::io(format!("create {}", tmp.display()), e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| RepoError::io(format!("write {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| RepoError::io(format!("rename to {}", path.display()), e))
}

impl Store {
    /// Opens `root`, creating an empty store if the directory has none.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, RepoError> {
        let store = Store { root: root.into() };
        let version = store.root.join("VERSION");
        match fs::read_to_string(&version) {
            Ok(v) if v.trim() == STORE_VERSION => {}
            Ok(v) => {
                return Err(RepoError::Corrupt(format!(
                    "unsupported store version {:?}",
                    v.trim()
                )))
            }
            Err(e) if e.kind() == ErrorKind::NotFound => {
                fs::create_dir_all(&store.root)
                    .map_err(|e| RepoError::io(format!("create {}", store.root.display()), e))?;
                write_atomic(&version, format!("{STORE_VERSION}\n").as_bytes())?;
            }
            Err(e) => return Err(RepoError::io(format!("read {}", version.display()), e)),
        }
        for dir in [store.models_dir(), store.claims_dir()] {
            fs::create_dir_all(&dir)
                .map_err(|e| RepoError::io(format!("create {}", dir.display()), e))?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    fn claims_dir(&self) -> PathBuf {
        self.root.join("index").join("claims")
    }

    fn metadata_path(&self) -> PathBuf {
        self.root.join("metadata.jsonl")
    }

    pub fn index_log_path(&self) -> PathBuf {
        self.root.join("index").join("relations.log")
    }

    /// Waits for the mutation lock, breaking locks left behind by dead writers.
    pub fn lock(&self) -> Result<StoreLock, RepoError> {
        let path = self.root.join("store.lock");
        let start = Instant::now();
        loop {
            match fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(StoreLock { path });
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    let age = fs::metadata(&path)
                        .and_then(|m| m.modified())
                        .ok()
                        .and_then(|t| SystemTime::now().duration_since(t).ok());
                    if age.is_some_and(|a| a > STALE_LOCK) {
                        log::warn!("removing stale lock {}", path.display());
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    if start.elapsed() > LOCK_WAIT {
                        return Err(RepoError::Locked(path.display().to_string()));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(RepoError::io(format!("create {}", path.display()), e)),
            }
        }
    }

    fn read_metadata(&self) -> Result<Vec<MetaRecord>, RepoError> {
        let path = self.metadata_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(RepoError::io(format!("read {}", path.display()), e)),
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l)
                    .map_err(|e| RepoError::Corrupt(format!("metadata.jsonl line {}: {e}", n + 1)))
            })
            .collect()
    }

    fn write_metadata(&self, records: &[MetaRecord], _lock: &StoreLock) -> Result<(), RepoError> {
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(r).expect("metadata serializes"));
            out.push('\n');
        }
        write_atomic(&self.metadata_path(), out.as_bytes())
    }

    /// Current repository contents.
    pub fn load(&self) -> Result<Repository, RepoError> {
        let mut repo = Repository::new();
        for record in self.read_metadata()? {
            match record {
                MetaRecord::Location { path } => {
                    repo.add_location(&path)?;
                }
                MetaRecord::Nesting { inner, outer } => repo.declare_nesting(&inner, &outer)?,
                MetaRecord::Model {
                    id,
                    location,
                    status,
                    attributes,
                } => {
                    let path = self.models_dir().join(&id);
                    let text = fs::read_to_string(&path)
                        .map_err(|e| RepoError::io(format!("read {}", path.display()), e))?;
                    let doc = read_pnml(&text).map_err(|source| RepoError::Pnml {
                        id: id.clone(),
                        source,
                    })?;
                    repo.insert(&id, doc.net, &location, attributes, status)?;
                }
            }
        }
        Ok(repo)
    }

    /// Adds a model with status unindexed. Returns PNML reader warnings.
    pub fn store_model(
        &self,
        id: &str,
        pnml: &str,
        location: &str,
        attributes: BTreeMap<String, String>,
    ) -> Result<Vec<String>, RepoError> {
        validate_id(id)?;
        let location = normalize_location(location)?;
        let doc = read_pnml(pnml).map_err(|source| RepoError::Pnml {
            id: id.to_string(),
            source,
        })?;
        let lock = self.lock()?;
        let mut records = self.read_metadata()?;
        if records
            .iter()
            .any(|r| matches!(r, MetaRecord::Model { id: other, .. } if other == id))
        {
            return Err(RepoError::Duplicate(id.to_string()));
        }
        write_atomic(&self.models_dir().join(id), pnml.as_bytes())?;
        let attributes = attributes
            .into_iter()
            .filter(|(k, _)| k != super::ID_ATTRIBUTE && k != super::LOCATION_ATTRIBUTE)
            .collect();
        records.push(MetaRecord::Model {
            id: id.to_string(),
            location,
            status: IndexStatus::Unindexed,
            attributes,
        });
        self.write_metadata(&records, &lock)?;
        Ok(doc.warnings)
    }

    /// Ingests every `*.pnml` file of `dir`, using file names as ids.
    pub fn store_dir(
        &self,
        dir: &Path,
        location: &str,
    ) -> Result<Vec<(String, Result<(), RepoError>)>, RepoError> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| RepoError::io(format!("list {}", dir.display()), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|x| x.eq_ignore_ascii_case("pnml"))
            })
            .collect();
        files.sort();
        let mut out = Vec::new();
        for path in files {
            let id = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            let result = fs::read_to_string(&path)
                .map_err(|e| RepoError::io(format!("read {}", path.display()), e))
                .and_then(|text| {
                    self.store_model(&id, &text, location, BTreeMap::new())
                        .map(|_| ())
                });
            out.push((id, result));
        }
        Ok(out)
    }

    pub fn set_status(&self, id: &str, status: IndexStatus) -> Result<(), RepoError> {
        let lock = self.lock()?;
        let mut records = self.read_metadata()?;
        let mut found = false;
        for r in &mut records {
            if let MetaRecord::Model {
                id: other,
                status: s,
                ..
            } = r
            {
                if other == id {
                    *s = status.clone();
                    found = true;
                }
            }
        }
        if !found {
            return Err(RepoError::UnknownModel(id.to_string()));
        }
        self.write_metadata(&records, &lock)
    }

    /// Removes the model, its PNML, its claim and its index records.
    pub fn delete(&self, id: &str) -> Result<(), RepoError> {
        let lock = self.lock()?;
        let mut records = self.read_metadata()?;
        let before = records.len();
        records.retain(|r| !matches!(r, MetaRecord::Model { id: other, .. } if other == id));
        if records.len() == before {
            return Err(RepoError::UnknownModel(id.to_string()));
        }
        self.write_metadata(&records, &lock)?;
        crate::index::append_tombstone(self, id, &lock)?;
        for path in [self.models_dir().join(id), self.claims_dir().join(id)] {
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == ErrorKind::NotFound => {}
                Err(e) => return Err(RepoError::io(format!("remove {}", path.display()), e)),
            }
        }
        Ok(())
    }

    /// Deletes all models, locations and index data.
    pub fn reset(&self) -> Result<(), RepoError> {
        let lock = self.lock()?;
        for dir in [self.models_dir(), self.root.join("index")] {
            match fs::remove_dir_all(&dir) {
                Ok(()) => {}
                Err(e) if e.kind() == ErrorKind::NotFound => {}
                Err(e) => return Err(RepoError::io(format!("remove {}", dir.display()), e)),
            }
        }
        self.write_metadata(&[], &lock)?;
        for dir in [self.models_dir(), self.claims_dir()] {
            fs::create_dir_all(&dir)
                .map_err(|e| RepoError::io(format!("create {}", dir.display()), e))?;
        }
        Ok(())
    }

    pub fn add_location(&self, location: &str) -> Result<(), RepoError> {
        let path = normalize_location(location)?;
        let lock = self.lock()?;
        let mut records = self.read_metadata()?;
        let record = MetaRecord::Location { path };
        if !records.contains(&record) {
            records.push(record);
            self.write_metadata(&records, &lock)?;
        }
        Ok(())
    }

    /// Declares `inner ≾ outer`.
    pub fn declare_nesting(&self, inner: &str, outer: &str) -> Result<(), RepoError> {
        let record = MetaRecord::Nesting {
            inner: normalize_location(inner)?,
            outer: normalize_location(outer)?,
        };
        let lock = self.lock()?;
        let mut records = self.read_metadata()?;
        if !records.contains(&record) {
            records.push(record);
            self.write_metadata(&records, &lock)?;
        }
        Ok(())
    }

    /// Atomically claims `id` for indexing; at most one caller ever succeeds
    /// until the model is deleted or the store reset.
    pub fn try_claim(&self, id: &str, bot: &str) -> Result<ClaimGuard, RepoError> {
        validate_id(id)?;
        let path = self.claims_dir().join(id);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{bot}");
                Ok(ClaimGuard::Claimed)
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Ok(ClaimGuard::Taken),
            Err(e) => Err(RepoError::io(format!("create {}", path.display()), e)),
        }
    }

    /// Name of the bot holding the claim on `id`, if any.
    pub fn claim_holder(&self, id: &str) -> Option<String> {
        fs::read_to_string(self.claims_dir().join(id))
            .ok()
            .map(|s| s.trim().to_string())
    }

    /// Drops a claim so the model can be indexed again.
    pub fn release_claim(&self, id: &str) -> Result<(), RepoError> {
        validate_id(id)?;
        match fs::remove_file(self.claims_dir().join(id)) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(()),
            Err(e) => Err(RepoError::io("remove claim", e)),
        }
    }
}
