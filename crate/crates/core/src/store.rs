//! Flat-file JSON store: one entity per file, `<kind>/<id>.json`.
//!
//! Every write goes to a temporary file in the target directory which is
//! fsynced and then renamed over the destination, so a crash mid-write
//! leaves the previously committed file intact.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{GroundTruthSet, Medication, PatientProfile, SubjectiveReview, SuitabilityReport};
use crate::smpc::{Chunk, SmpcDocument};

pub const SCHEMA_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("store schema version {found} does not match supported version {expected}")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("no store at {0} (run init first)")]
    NotInitialized(PathBuf),
    #[error("invalid entity id {0:?}")]
    InvalidId(String),
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::StorageFailure(e.to_string())
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(e: serde_json::Error) -> Self {
        StoreError::StorageFailure(e.to_string())
    }
}

/// Writes `bytes` to `path` via fsynced temp file and rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Profiles,
    Medications,
    Smpc,
    Chunks,
    Reports,
    Truth,
    Reviews,
}

impl EntityKind {
    pub fn dir(self) -> &'static str {
        match self {
            EntityKind::Profiles => "profiles",
            EntityKind::Medications => "medications",
            EntityKind::Smpc => "smpc",
            EntityKind::Chunks => "chunks",
            EntityKind::Reports => "reports",
            EntityKind::Truth => "truth",
            EntityKind::Reviews => "reviews",
        }
    }

    fn singular(self) -> &'static str {
        match self {
            EntityKind::Profiles => "profile",
            EntityKind::Medications => "medication",
            EntityKind::Smpc => "document",
            EntityKind::Chunks => "chunk set",
            EntityKind::Reports => "report",
            EntityKind::Truth => "ground truth",
            EntityKind::Reviews => "review",
        }
    }
}

const ENTITY_DIRS: [EntityKind; 7] = [
    EntityKind::Profiles,
    EntityKind::Medications,
    EntityKind::Smpc,
    EntityKind::Chunks,
    EntityKind::Reports,
    EntityKind::Truth,
    EntityKind::Reviews,
];
const EXTRA_DIRS: [&str; 2] = ["vectors", "fixtures"];

pub trait Entity: Serialize + DeserializeOwned {
    const KIND: EntityKind;
    fn entity_id(&self) -> String;
}

impl Entity for PatientProfile {
    const KIND: EntityKind = EntityKind::Profiles;
    fn entity_id(&self) -> String {
        self.id.clone()
    }
}

impl Entity for Medication {
    const KIND: EntityKind = EntityKind::Medications;
    fn entity_id(&self) -> String {
        self.id.clone()
    }
}

impl Entity for SmpcDocument {
    const KIND: EntityKind = EntityKind::Smpc;
    fn entity_id(&self) -> String {
        self.doc_id.clone()
    }
}

impl Entity for SuitabilityReport {
    const KIND: EntityKind = EntityKind::Reports;
    fn entity_id(&self) -> String {
        self.id.clone()
    }
}

impl Entity for SubjectiveReview {
    const KIND: EntityKind = EntityKind::Reviews;
    fn entity_id(&self) -> String {
        self.storage_id()
    }
}

/// All chunks of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSet {
    pub doc_id: String,
    pub chunks: Vec<Chunk>,
}

impl Entity for ChunkSet {
    const KIND: EntityKind = EntityKind::Chunks;
    fn entity_id(&self) -> String {
        self.doc_id.clone()
    }
}

/// A named ground-truth file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthFile {
    pub id: String,
    pub entries: GroundTruthSet,
}

impl Entity for TruthFile {
    const KIND: EntityKind = EntityKind::Truth;
    fn entity_id(&self) -> String {
        self.id.clone()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
}

/// Ids become file names, so path syntax is refused.
fn check_id(id: &str) -> Result<(), StoreError> {
    let bad = id.is_empty()
        || id.starts_with('.')
        || id.contains(['/', '\\', '\0'])
        || id.chars().any(char::is_control);
    if bad {
        Err(StoreError::InvalidId(id.to_string()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Creates the layout under `root` if missing and opens it.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        for kind in ENTITY_DIRS {
            std::fs::create_dir_all(root.join(kind.dir()))?;
        }
        for d in EXTRA_DIRS {
            std::fs::create_dir_all(root.join(d))?;
        }
        let manifest = root.join(MANIFEST);
        if !manifest.exists() {
            let m = serde_json::to_vec_pretty(&Manifest {
                schema_version: SCHEMA_VERSION,
            })?;
            atomic_write(&manifest, &m)?;
        }
        Self::open(root)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let manifest = root.join(MANIFEST);
        if !manifest.exists() {
            return Err(StoreError::NotInitialized(root));
        }
        let m: Manifest = serde_json::from_slice(&std::fs::read(&manifest)?)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaVersionMismatch {
                found: m.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, kind: EntityKind, id: &str) -> Result<PathBuf, StoreError> {
        check_id(id)?;
        Ok(self.root.join(kind.dir()).join(format!("{id}.json")))
    }

    pub fn put<E: Entity>(&self, entity: &E) -> Result<(), StoreError> {
        let path = self.path_of(E::KIND, &entity.entity_id())?;
        let bytes = serde_json::to_vec_pretty(entity)?;
        atomic_write(&path, &bytes)?;
        Ok(())
    }

    pub fn get<E: Entity>(&self, id: &str) -> Result<E, StoreError> {
        let path = self.path_of(E::KIND, id)?;
        match std::fs::read(&path) {
            Ok(bytes) => Ok(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::NotFound {
                kind: E::KIND.singular(),
                id: id.to_string(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains<E: Entity>(&self, id: &str) -> bool {
        self.path_of(E::KIND, id).map(|p| p.is_file()).unwrap_or(false)
    }

    /// Returns whether an entity was removed.
    pub fn delete<E: Entity>(&self, id: &str) -> Result<bool, StoreError> {
        let path = self.path_of(E::KIND, id)?;
        match std::fs::remove_file(path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// Entity ids of one kind in lexicographic order.
    pub fn list<E: Entity>(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(self.root.join(E::KIND.dir()))? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            if let Some(id) = name.strip_suffix(".json") {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn all<E: Entity>(&self) -> Result<Vec<E>, StoreError> {
        self.list::<E>()?.iter().map(|id| self.get(id)).collect()
    }

    /// Union of every stored ground-truth file.
    pub fn ground_truth(&self) -> Result<GroundTruthSet, StoreError> {
        let mut set = GroundTruthSet::new();
        for file in self.all::<TruthFile>()? {
            for row in file.entries.entries() {
                set.insert(row).map_err(|e| StoreError::StorageFailure(e.to_string()))?;
            }
        }
        Ok(set)
    }

    pub fn vectors_path(&self) -> PathBuf {
        self.root.join("vectors").join("index.f32")
    }

    pub fn vectors_manifest_path(&self) -> PathBuf {
        self.root.join("vectors").join("index.json")
    }

    pub fn fixtures_dir(&self) -> PathBuf {
        self.root.join("fixtures")
    }
}
