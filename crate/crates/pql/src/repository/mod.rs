//! Models, their attributes and locations, and the location nesting relation.
//!
//! [`Repository`] is the in-memory view used by queries; [`Store`] persists it
//! in a directory (see the `store` module for the layout).

mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::labels::Vocabulary;
use crate::petri::pnml::{read_pnml, PnmlError};
use crate::petri::NetSystem;

pub use store::{ClaimGuard, Store, StoreLock, STORE_VERSION};

/// Attributes every stored model carries.
pub const ID_ATTRIBUTE: &str = "ID";
pub const LOCATION_ATTRIBUTE: &str = "Location";

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("model {0:?} already exists")]
    Duplicate(String),
    #[error("no model with id {0:?}")]
    UnknownModel(String),
    #[error("invalid model id {0:?}")]
    InvalidId(String),
    #[error("invalid location {0:?}: locations are absolute slash-separated paths")]
    InvalidLocation(String),
    #[error("model {id:?}: {source}")]
    Pnml { id: String, source: PnmlError },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("store is locked by another process (lock file {0})")]
    Locked(String),
}

impl RepoError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        RepoError::Io {
            context: context.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum IndexStatus {
    Unindexed,
    Indexing { by: String },
    Indexed { thresholds: Vec<f64>, seconds: f64 },
    CannotIndex { reason: String },
}

impl IndexStatus {
    pub fn label(&self) -> String {
        match self {
            IndexStatus::Unindexed => "unindexed".into(),
            IndexStatus::Indexing { by } => format!("indexing (by {by})"),
            IndexStatus::Indexed {
                thresholds,
                seconds,
            } => {
                let ts: Vec<String> = thresholds.iter().map(|t| t.to_string()).collect();
                format!("indexed at {} in {seconds:.3}s", ts.join(","))
            }
            IndexStatus::CannotIndex { reason } => format!("cannot index: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelRecord {
    pub id: String,
    pub location: String,
    /// Includes the standard `ID` and `Location` attributes.
    pub attributes: BTreeMap<String, String>,
    pub status: IndexStatus,
    pub net: NetSystem,
    /// Why the net is not a workflow system, if it is not one.
    pub workflow_violation: Option<String>,
}

impl ModelRecord {
    pub fn is_workflow(&self) -> bool {
        self.workflow_violation.is_none()
    }
}

/// Ids become file names in a store, so path separators and dot names are refused.
pub fn validate_id(id: &str) -> Result<(), RepoError> {
    let bad = id.is_empty()
        || id == "."
        || id == ".."
        || id.contains(['/', '\\'])
        || id.chars().any(char::is_control)
        || id.starts_with(".tmp");
    if bad {
        Err(RepoError::InvalidId(id.to_string()))
    } else {
        Ok(())
    }
}

/// Canonical form: leading `/`, no empty segments, no trailing `/` except for the root.
pub fn normalize_location(location: &str) -> Result<String, RepoError> {
    if !location.starts_with('/') || location.chars().any(char::is_control) {
        return Err(RepoError::InvalidLocation(location.to_string()));
    }
    let parts: Vec<&str> = location.split('/').filter(|s| !s.is_empty()).collect();
    Ok(format!("/{}", parts.join("/")))
}

#[derive(Debug, Clone, Default)]
pub struct Repository {
    models: BTreeMap<String, ModelRecord>,
    locations: BTreeSet<String>,
    nesting: BTreeSet<(String, String)>,
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `pnml` and adds the model.
    pub fn store(
        &mut self,
        id: &str,
        pnml: &str,
        location: &str,
        attributes: BTreeMap<String, String>,
    ) -> Result<&ModelRecord, RepoError> {
        validate_id(id)?;
        if self.models.contains_key(id) {
            return Err(RepoError::Duplicate(id.to_string()));
        }
        let doc = read_pnml(pnml).map_err(|source| RepoError::Pnml {
            id: id.to_string(),
            source,
        })?;
        self.insert(id, doc.net, location, attributes, IndexStatus::Unindexed)
    }

    /// Adds an already-built net.
    pub fn insert(
        &mut self,
        id: &str,
        net: NetSystem,
        location: &str,
        mut attributes: BTreeMap<String, String>,
        status: IndexStatus,
    ) -> Result<&ModelRecord, RepoError> {
        validate_id(id)?;
        if self.models.contains_key(id) {
            return Err(RepoError::Duplicate(id.to_string()));
        }
        let location = normalize_location(location)?;
        self.locations.insert(location.clone());
        attributes.insert(ID_ATTRIBUTE.into(), id.to_string());
        attributes.insert(LOCATION_ATTRIBUTE.into(), location.clone());
        let workflow_violation = net.is_workflow().err().map(|v| v.to_string());
        let record = ModelRecord {
            id: id.to_string(),
            location,
            attributes,
            status,
            net,
            workflow_violation,
        };
        Ok(self.models.entry(id.to_string()).or_insert(record))
    }

    pub fn delete(&mut self, id: &str) -> Result<ModelRecord, RepoError> {
        self.models
            .remove(id)
            .ok_or_else(|| RepoError::UnknownModel(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Option<&ModelRecord> {
        self.models.get(id)
    }

    pub fn set_status(&mut self, id: &str, status: IndexStatus) -> Result<(), RepoError> {
        let m = self
            .models
            .get_mut(id)
            .ok_or_else(|| RepoError::UnknownModel(id.to_string()))?;
        m.status = status;
        Ok(())
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelRecord> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn add_location(&mut self, location: &str) -> Result<String, RepoError> {
        let l = normalize_location(location)?;
        self.locations.insert(l.clone());
        Ok(l)
    }

    pub fn locations(&self) -> &BTreeSet<String> {
        &self.locations
    }

    /// Declares `inner ≾ outer`.
    pub fn declare_nesting(&mut self, inner: &str, outer: &str) -> Result<(), RepoError> {
        let inner = self.add_location(inner)?;
        let outer = self.add_location(outer)?;
        self.nesting.insert((inner, outer));
        Ok(())
    }

    pub fn declared_nesting(&self) -> &BTreeSet<(String, String)> {
        &self.nesting
    }

    /// Reflexive, declared, or implied by path containment. Not transitively closed
    /// over declared pairs.
    pub fn nested(&self, l1: &str, l2: &str) -> bool {
        let (Ok(a), Ok(b)) = (normalize_location(l1), normalize_location(l2)) else {
            return false;
        };
        a == b
            || self.nesting.contains(&(a.clone(), b.clone()))
            || b == "/"
            || a.starts_with(&format!("{b}/"))
    }

    /// Models whose location is nested in `location`, by id.
    pub fn list(&self, location: &str) -> Vec<&ModelRecord> {
        self.models
            .values()
            .filter(|m| self.nested(&m.location, location))
            .collect()
    }

    /// Observable labels of every stored model.
    pub fn vocabulary(&self) -> Vocabulary {
        self.models
            .values()
            .flat_map(|m| m.net.observable_labels())
            .collect()
    }

    pub fn attribute_names(&self) -> BTreeSet<String> {
        self.models
            .values()
            .flat_map(|m| m.attributes.keys().cloned())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::petri::pnml::write_pnml;

    fn attrs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn store_and_retrieve() {
        let mut r = Repository::new();
        let rec = r
            .store(
                "f5",
                &write_pnml(&fixtures::f5()),
                "/fixtures",
                attrs(&[("Author", "test")]),
            )
            .unwrap();
        assert_eq!(rec.attributes["ID"], "f5");
        assert_eq!(rec.attributes["Location"], "/fixtures");
        assert_eq!(rec.status, IndexStatus::Unindexed);
        assert!(rec.is_workflow());
        assert_eq!(r.get("f5").unwrap().attributes["Author"], "test");
        assert!(matches!(
            r.store("f5", &write_pnml(&fixtures::f5()), "/", BTreeMap::new()),
            Err(RepoError::Duplicate(_))
        ));
        assert!(matches!(
            r.store("bad", "<pnml>", "/", BTreeMap::new()),
            Err(RepoError::Pnml { .. })
        ));
    }

    #[test]
    fn non_workflow_nets_are_accepted_but_flagged() {
        let mut b = fixtures::f5_builder();
        b.set_tokens("i", 0).set_tokens("p1", 1);
        let mut r = Repository::new();
        let rec = r
            .insert(
                "m",
                b.build().unwrap(),
                "/",
                BTreeMap::new(),
                IndexStatus::Unindexed,
            )
            .unwrap();
        assert!(!rec.is_workflow());
    }

    #[test]
    fn nesting() {
        let mut r = Repository::new();
        r.declare_nesting("/Ten-Models-BPMN", "/archive").unwrap();
        assert!(r.nested("/a", "/a"));
        assert!(r.nested("/Ten-Models-BPMN", "/"));
        assert!(r.nested("/Ten-Models-BPMN", "/archive"));
        assert!(r.nested("/a/b/c", "/a/b"));
        assert!(!r.nested("/a/bc", "/a/b"));
        assert!(!r.nested("/x", "/y"));
        assert!(!r.nested("/archive", "/Ten-Models-BPMN"));
    }

    #[test]
    fn ids_and_locations_are_validated() {
        for bad in ["", ".", "..", "a/b", "a\\b", "a\nb"] {
            assert!(validate_id(bad).is_err(), "{bad:?}");
        }
        assert!(validate_id("Fig.4.pnml").is_ok());
        assert_eq!(normalize_location("//a//b/").unwrap(), "/a/b");
        assert_eq!(normalize_location("/").unwrap(), "/");
        assert!(normalize_location("a").is_err());
    }

    #[test]
    fn store_then_delete_restores_state() {
        let mut r = Repository::new();
        r.insert(
            "a",
            fixtures::single("x"),
            "/",
            BTreeMap::new(),
            IndexStatus::Unindexed,
        )
        .unwrap();
        let before: Vec<String> = r.models().map(|m| m.id.clone()).collect();
        let vocab = r.vocabulary();
        r.insert(
            "b",
            fixtures::single("y"),
            "/",
            BTreeMap::new(),
            IndexStatus::Unindexed,
        )
        .unwrap();
        r.delete("b").unwrap();
        assert_eq!(r.models().map(|m| m.id.clone()).collect::<Vec<_>>(), before);
        assert_eq!(r.vocabulary(), vocab);
        assert!(matches!(r.delete("b"), Err(RepoError::UnknownModel(_))));
    }
}
