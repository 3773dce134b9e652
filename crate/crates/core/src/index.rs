//! Exact cosine-similarity vector index with optional per-medication filter.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{dot, EmbedError, EmbeddingVector};
use crate::scalar::FloatScalar;
use crate::store::atomic_write;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("dimension mismatch: index is {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no entries to search")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("index persistence failed: {0}")]
    Io(String),
    #[error("index files are inconsistent: {0}")]
    Corrupt(String),
}

impl From<EmbedError> for IndexError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::DimensionMismatch { expected, got } => IndexError::DimensionMismatch { expected, got },
            EmbedError::ZeroVector => IndexError::ZeroVector,
            other => IndexError::Corrupt(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry<T> {
    pub chunk_id: String,
    pub medication_id: String,
    pub vector: EmbeddingVector<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk<T> {
    pub chunk_id: String,
    pub medication_id: String,
    pub similarity: T,
}

#[derive(Debug, Clone)]
struct Slot<T> {
    entry: IndexEntry<T>,
    norm: T,
}

#[derive(Debug, Clone)]
pub struct VectorIndex<T> {
    dim: usize,
    slots: Vec<Slot<T>>,
    by_chunk: HashMap<String, usize>,
}

/// Ranking order: similarity descending, then chunk id ascending.
fn rank_cmp<T: FloatScalar>(a: &ScoredChunk<T>, b: &ScoredChunk<T>) -> Ordering {
    b.similarity
        .partial_cmp(&a.similarity)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.chunk_id.cmp(&b.chunk_id))
}

// Heap item whose maximum is the worst-ranked result.
struct Worst<T>(ScoredChunk<T>);

impl<T: FloatScalar> PartialEq for Worst<T> {
    fn eq(&self, other: &Self) -> bool {
        rank_cmp(&self.0, &other.0) == Ordering::Equal
    }
}
impl<T: FloatScalar> Eq for Worst<T> {}
impl<T: FloatScalar> PartialOrd for Worst<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: FloatScalar> Ord for Worst<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_cmp(&self.0, &other.0)
    }
}

impl<T: FloatScalar> VectorIndex<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            slots: Vec::new(),
            by_chunk: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn count_for(&self, medication_id: &str) -> usize {
        self.slots
            .iter()
            .filter(|s| s.entry.medication_id == medication_id)
            .count()
    }

    pub fn get(&self, chunk_id: &str) -> Option<&IndexEntry<T>> {
        self.by_chunk.get(chunk_id).map(|&i| &self.slots[i].entry)
    }

    pub fn entries(&self) -> impl Iterator<Item = &IndexEntry<T>> {
        self.slots.iter().map(|s| &s.entry)
    }

    /// Inserts the entry, or replaces the vector stored under its chunk id.
    /// The vector is re-normalized on the way in.
    pub fn upsert(&mut self, mut entry: IndexEntry<T>) -> Result<(), IndexError> {
        if entry.vector.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                got: entry.vector.dim(),
            });
        }
        entry.vector = entry.vector.into_normalized()?;
        let norm = entry.vector.norm();
        let slot = Slot { entry, norm };
        match self.by_chunk.get(&slot.entry.chunk_id) {
            Some(&i) => self.slots[i] = slot,
            None => {
                self.by_chunk.insert(slot.entry.chunk_id.clone(), self.slots.len());
                self.slots.push(slot);
            }
        }
        Ok(())
    }

    /// Drops every entry of one medication. Returns how many were removed.
    pub fn remove_medication(&mut self, medication_id: &str) -> usize {
        let before = self.slots.len();
        self.slots.retain(|s| s.entry.medication_id != medication_id);
        self.by_chunk = self
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| (s.entry.chunk_id.clone(), i))
            .collect();
        before - self.slots.len()
    }

    /// The `k` entries most similar to `query`, best first, ties broken by
    /// chunk id. With `filter`, only entries of that medication compete.
    pub fn top_k(
        &self,
        query: &EmbeddingVector<T>,
        k: usize,
        filter: Option<&str>,
    ) -> Result<Vec<ScoredChunk<T>>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let qnorm = query.norm();
        if qnorm == T::zero() {
            return Err(IndexError::ZeroVector);
        }

        let mut heap: BinaryHeap<Worst<T>> = BinaryHeap::with_capacity(k + 1);
        let mut seen = 0usize;
        for slot in &self.slots {
            if filter.is_some_and(|m| slot.entry.medication_id != m) {
                continue;
            }
            seen += 1;
            let similarity = dot(query.values(), slot.entry.vector.values()) / (qnorm * slot.norm);
            let cand = ScoredChunk {
                chunk_id: slot.entry.chunk_id.clone(),
                medication_id: slot.entry.medication_id.clone(),
                similarity,
            };
            if heap.len() < k {
                heap.push(Worst(cand));
            } else if let Some(worst) = heap.peek() {
                if rank_cmp(&cand, &worst.0) == Ordering::Less {
                    heap.pop();
                    heap.push(Worst(cand));
                }
            }
        }
        if seen == 0 {
            return Err(IndexError::EmptyIndex);
        }
        Ok(heap.into_sorted_vec().into_iter().map(|w| w.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub medication_id: String,
    /// Byte offset into the vector file.
    pub offset: u64,
    pub dim: usize,
}

/// Sidecar describing a vector file of little-endian `f32` values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub dim: usize,
    pub entries: BTreeMap<String, ManifestEntry>,
}

impl<T: FloatScalar> VectorIndex<T> {
    /// Writes the vectors (chunk id order) and the JSON manifest.
    pub fn save(&self, vectors_path: &Path, manifest_path: &Path) -> Result<(), IndexError> {
        let mut ordered: Vec<&IndexEntry<T>> = self.entries().collect();
        ordered.sort_by(|a, b| a.chunk_id.cmp(&b.chunk_id));

        let mut bytes = Vec::with_capacity(ordered.len() * self.dim * 4);
        let mut entries = BTreeMap::new();
        for e in ordered {
            entries.insert(
                e.chunk_id.clone(),
                ManifestEntry {
                    medication_id: e.medication_id.clone(),
                    offset: bytes.len() as u64,
                    dim: e.vector.dim(),
                },
            );
            for v in e.vector.values() {
                let f = v.to_f32().ok_or_else(|| IndexError::Io("value not representable as f32".into()))?;
                bytes.extend_from_slice(&f.to_le_bytes());
            }
        }
        let manifest = IndexManifest { dim: self.dim, entries };
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| IndexError::Io(e.to_string()))?;
        atomic_write(vectors_path, &bytes).map_err(|e| IndexError::Io(e.to_string()))?;
        atomic_write(manifest_path, &json).map_err(|e| IndexError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn load(vectors_path: &Path, manifest_path: &Path) -> Result<Self, IndexError> {
        let json = std::fs::read(manifest_path).map_err(|e| IndexError::Io(e.to_string()))?;
        let manifest: IndexManifest =
            serde_json::from_slice(&json).map_err(|e| IndexError::Corrupt(e.to_string()))?;
        let bytes = std::fs::read(vectors_path).map_err(|e| IndexError::Io(e.to_string()))?;

        let mut index = VectorIndex::new(manifest.dim);
        for (chunk_id, m) in manifest.entries {
            if m.dim != manifest.dim {
                return Err(IndexError::Corrupt(format!("{chunk_id}: dim {} != {}", m.dim, manifest.dim)));
            }
            let start = m.offset as usize;
            let end = start + m.dim * 4;
            let raw = bytes
                .get(start..end)
                .ok_or_else(|| IndexError::Corrupt(format!("{chunk_id}: range {start}..{end} out of file")))?;
            let values = raw
                .chunks_exact(4)
                .map(|b| T::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])).unwrap_or_else(T::nan))
                .collect();
            let vector = EmbeddingVector::new(values)?;
            index.upsert(IndexEntry {
                chunk_id,
                medication_id: m.medication_id,
                vector,
            })?;
        }
        Ok(index)
    }
}
