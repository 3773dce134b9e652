//! Operations shared by the CLI and the HTTP API, over one store directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::Utc;
use rxguard_core::domain::{
    validate_profile, DomainError, GroundTruthSet, Medication, MedicationCatalog, PatientProfile, ProfileViolation,
    SubjectiveReview, SuitabilityReport, TruthEntry,
};
use rxguard_core::embed::{embed_many, EmbedError, EmbeddingProvider, HashingEmbedder, HttpEmbedder};
use rxguard_core::evaluation::{
    metrics_from_reports, run_experiment, summarize_reviews, EvalError, ExperimentContext, ExperimentOutcome,
    ExperimentSpec, MetricsTable, ReviewSummary,
};
use rxguard_core::gateway::{
    api_key_var, CompletionBackend, FixtureStore, GatewayError, LiveBackend, RecordedBackend, RecordingBackend,
};
use rxguard_core::http::RetryPolicy;
use rxguard_core::index::{IndexEntry, IndexError};
use rxguard_core::pipeline::{assess, AssessError, AssessRequest, Assessment};
use rxguard_core::prompt::{assemble_prompt, ContextBundle, Prompt, PromptError};
use rxguard_core::smpc::{chunk_document, parse_smpc, Chunk, IngestError, SmpcDocument};
use rxguard_core::store::{ChunkSet, Store, StoreError, TruthFile};
use rxguard_core::{Index, Retriever};
use serde::Serialize;

use crate::config::{BackendSpec, Config, ConfigError, EmbeddingSpec};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("profile has {} invariant violation(s)", .0.len())]
    InvalidProfile(Vec<ProfileViolation>),
    #[error("profile {0:?} has not been verified")]
    UnverifiedProfile(String),
    #[error("no backend configured for model {0:?}")]
    UnknownModel(String),
    #[error("medication {0:?} has no indexed SmPC chunks")]
    NotIndexed(String),
    #[error("report {id} fails its invariants: {detail}")]
    ReportInvariant { id: String, detail: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Store(StoreError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Prompt(PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { kind, id } => EngineError::NotFound { kind, id },
            other => EngineError::Store(other),
        }
    }
}

impl From<PromptError> for EngineError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::UnverifiedProfile(id) => EngineError::UnverifiedProfile(id),
            PromptError::NotIndexed(id) => EngineError::NotIndexed(id),
            other => EngineError::Prompt(other),
        }
    }
}

impl From<AssessError> for EngineError {
    fn from(e: AssessError) -> Self {
        match e {
            AssessError::UnverifiedProfile(id) => EngineError::UnverifiedProfile(id),
            AssessError::RagUnavailable => EngineError::NotIndexed("*".into()),
            AssessError::Prompt(p) => p.into(),
            AssessError::Gateway(g) => EngineError::Gateway(g),
        }
    }
}

impl EngineError {
    /// Stable identifier used in error bodies and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::NotFound { .. } => "NotFound",
            EngineError::InvalidProfile(_) => "InvalidProfile",
            EngineError::UnverifiedProfile(_) => "UnverifiedProfile",
            EngineError::UnknownModel(_) => "UnknownModel",
            EngineError::NotIndexed(_) => "NotIndexed",
            EngineError::ReportInvariant { .. } => "ReportInvariant",
            EngineError::Io { .. } => "IoError",
            EngineError::Domain(DomainError::ScoreOutOfRange { .. }) => "ScoreOutOfRange",
            EngineError::Domain(_) => "InvalidInput",
            EngineError::Store(StoreError::SchemaVersionMismatch { .. }) => "SchemaVersionMismatch",
            EngineError::Store(StoreError::NotInitialized(_)) => "NotInitialized",
            EngineError::Store(StoreError::InvalidId(_)) => "InvalidId",
            EngineError::Store(_) => "StorageFailure",
            EngineError::Ingest(IngestError::EmptyDocument) => "EmptyDocument",
            EngineError::Ingest(_) => "InvalidParams",
            EngineError::Index(_) => "IndexError",
            EngineError::Embed(_) => "EmbeddingFailure",
            EngineError::Prompt(_) => "PromptError",
            EngineError::Gateway(GatewayError::Timeout { .. }) => "Timeout",
            EngineError::Gateway(GatewayError::AuthFailure { .. }) => "AuthFailure",
            EngineError::Gateway(GatewayError::FixtureMissing { .. }) => "FixtureMissing",
            EngineError::Gateway(_) => "GatewayError",
            EngineError::Eval(EvalError::NoReviews) => "NoReviews",
            EngineError::Eval(EvalError::InvalidSpec(_)) => "InvalidSpec",
            EngineError::Eval(_) => "EvaluationError",
            EngineError::Config(_) => "ConfigError",
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EngineError + '_ {
    move |e| EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Indexed vectors plus the chunk texts they point at.
#[derive(Default)]
pub struct Knowledge {
    pub index: Option<Index>,
    pub chunks: HashMap<String, Chunk>,
}

impl Knowledge {
    pub fn retriever<'a>(&'a self, embedder: &'a dyn EmbeddingProvider) -> Option<Retriever<'a>> {
        self.index.as_ref().map(|index| Retriever {
            index,
            chunks: &self.chunks,
            embedder,
        })
    }

    pub fn indexed_chunks(&self, medication_id: &str) -> usize {
        self.index.as_ref().map_or(0, |i| i.count_for(medication_id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub medication_id: String,
    pub doc_id: String,
    pub sections: usize,
    pub chunks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSummary {
    pub chunks: usize,
    pub medications: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MedicationStatus {
    pub id: String,
    pub name: String,
    pub smpc_doc_id: String,
    pub smpc_available: bool,
    pub indexed_chunks: usize,
}

pub struct Engine {
    store: Store,
    config: Config,
    embedder: Arc<dyn EmbeddingProvider>,
    backends: HashMap<String, Arc<dyn CompletionBackend>>,
    knowledge: RwLock<Arc<Knowledge>>,
    writer: Mutex<()>,
}

fn build_embedder(spec: &EmbeddingSpec) -> Result<Arc<dyn EmbeddingProvider>> {
    Ok(match spec {
        EmbeddingSpec::Hashing => Arc::new(HashingEmbedder::default()),
        EmbeddingSpec::Http {
            endpoint,
            model,
            timeout_secs,
            max_retries,
        } => Arc::new(HttpEmbedder::new(
            endpoint.as_str(),
            model.clone(),
            std::env::var(api_key_var(model.as_deref().unwrap_or("embedding"))).ok(),
            Duration::from_secs(*timeout_secs),
            RetryPolicy {
                max_retries: *max_retries,
                ..RetryPolicy::default()
            },
        )?),
    })
}

fn build_backends(config: &Config) -> Result<HashMap<String, Arc<dyn CompletionBackend>>> {
    let mut out: HashMap<String, Arc<dyn CompletionBackend>> = HashMap::new();
    for spec in &config.backends {
        let backend: Arc<dyn CompletionBackend> = match spec {
            BackendSpec::Live(c) => Arc::new(LiveBackend::new(c.clone())?),
            BackendSpec::Recorded { model_id, fixtures } => {
                let path = config.resolve(fixtures);
                let b = RecordedBackend::from_file(model_id.clone(), &path)?;
                if b.is_empty() {
                    tracing::warn!(model_id, path = %path.display(), "recorded backend has no fixtures");
                }
                Arc::new(b)
            }
        };
        out.insert(spec.model_id().to_string(), backend);
    }
    Ok(out)
}

impl Engine {
    /// Opens an initialized store with the given configuration.
    pub fn open(store_root: impl Into<PathBuf>, config: Config) -> Result<Self> {
        config.validate()?;
        let store = Store::open(store_root)?;
        let embedder = build_embedder(&config.embedding)?;
        let backends = build_backends(&config)?;
        let engine = Self {
            store,
            config,
            embedder,
            backends,
            knowledge: RwLock::new(Arc::new(Knowledge::default())),
            writer: Mutex::new(()),
        };
        engine.reload_knowledge()?;
        Ok(engine)
    }

    /// Config path default: `<store>/config.json`, or built-in defaults when absent.
    pub fn load_config(store_root: &Path, explicit: Option<&Path>) -> Result<Config> {
        match explicit {
            Some(p) => Ok(Config::load(p)?),
            None => {
                let p = store_root.join("config.json");
                if p.exists() {
                    Ok(Config::load(&p)?)
                } else {
                    Ok(Config {
                        base_dir: store_root.to_path_buf(),
                        ..Config::default()
                    })
                }
            }
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn model_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.backends.keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn knowledge(&self) -> Arc<Knowledge> {
        self.knowledge.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn lock_writer(&self) -> std::sync::MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn reload_knowledge(&self) -> Result<()> {
        let mut chunks = HashMap::new();
        for set in self.store.all::<ChunkSet>()? {
            for c in set.chunks {
                chunks.insert(c.chunk_id.clone(), c);
            }
        }
        let vectors = self.store.vectors_path();
        let manifest = self.store.vectors_manifest_path();
        let index = if vectors.exists() && manifest.exists() {
            Some(Index::load(&vectors, &manifest)?)
        } else {
            None
        };
        *self.knowledge.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(Knowledge { index, chunks });
        Ok(())
    }

    // -- profiles ---------------------------------------------------------

    pub fn put_profile(&self, profile: &PatientProfile) -> Result<()> {
        validate_profile(profile).map_err(EngineError::InvalidProfile)?;
        let _w = self.lock_writer();
        self.store.put(profile)?;
        Ok(())
    }

    pub fn profile(&self, id: &str) -> Result<PatientProfile> {
        Ok(self.store.get(id)?)
    }

    pub fn profiles(&self) -> Result<Vec<PatientProfile>> {
        Ok(self.store.all()?)
    }

    /// Imports one profile file, a JSON array file, or every `*.json` in a directory.
    pub fn import_profiles(&self, path: &Path) -> Result<usize> {
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(io_err(path))? {
                let p = entry.map_err(io_err(path))?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut profiles = Vec::new();
        for f in &files {
            let v: serde_json::Value = read_json(f)?;
            let parsed: Vec<PatientProfile> = if v.is_array() {
                serde_json::from_value(v)
            } else {
                serde_json::from_value(v).map(|p| vec![p])
            }
            .map_err(|e| EngineError::Io {
                path: f.clone(),
                message: e.to_string(),
            })?;
            profiles.extend(parsed);
        }
        for p in &profiles {
            self.put_profile(p)?;
        }
        Ok(profiles.len())
    }

    // -- medications and SmPCs -------------------------------------------

    pub fn catalog(&self) -> Result<MedicationCatalog> {
        let mut cat = MedicationCatalog::new();
        for m in self.store.all::<Medication>()? {
            cat.upsert(m)?;
        }
        Ok(cat)
    }

    pub fn medication(&self, id: &str) -> Result<Medication> {
        Ok(self.store.get(id)?)
    }

    pub fn medications(&self) -> Result<Vec<MedicationStatus>> {
        let k = self.knowledge();
        Ok(self
            .store
            .all::<Medication>()?
            .into_iter()
            .map(|m| MedicationStatus {
                smpc_available: self.store.contains::<SmpcDocument>(&m.smpc_doc_id),
                indexed_chunks: k.indexed_chunks(&m.id),
                id: m.id,
                name: m.name,
                smpc_doc_id: m.smpc_doc_id,
            })
            .collect())
    }

    /// Parses, chunks and stores an SmPC. Re-ingesting replaces the document
    /// and its chunks; vectors change only on the next `index` run.
    pub fn ingest_smpc(&self, path: &Path, medication_name: &str) -> Result<IngestSummary> {
        let source = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.ingest_smpc_text(&source, medication_name)
    }

    pub fn ingest_smpc_text(&self, source: &str, medication_name: &str) -> Result<IngestSummary> {
        let med = Medication::from_name(medication_name);
        if med.id.is_empty() {
            return Err(DomainError::EmptyName.into());
        }
        let doc = parse_smpc(source, &med.smpc_doc_id, &med.name)?;
        let chunks = chunk_document(&doc, self.config.chunking)?;
        let summary = IngestSummary {
            medication_id: med.id.clone(),
            doc_id: doc.doc_id.clone(),
            sections: doc.sections.len(),
            chunks: chunks.len(),
        };
        {
            let _w = self.lock_writer();
            let mut catalog = self.catalog()?;
            catalog.upsert(med.clone())?;
            self.store.put(&doc)?;
            self.store.put(&ChunkSet {
                doc_id: doc.doc_id.clone(),
                chunks,
            })?;
            self.store.put(&med)?;
        }
        self.reload_knowledge()?;
        Ok(summary)
    }

    /// Rebuilds vectors for every stored chunk, or for one medication.
    pub async fn index(&self, only: Option<&str>) -> Result<IndexSummary> {
        let meds = self.store.all::<Medication>()?;
        if let Some(id) = only {
            if !meds.iter().any(|m| m.id == id) {
                return Err(EngineError::NotFound {
                    kind: "medication",
                    id: id.to_string(),
                });
            }
        }
        let current = self.knowledge();
        let mut index = match (only, &current.index) {
            (Some(_), Some(existing)) => existing.clone(),
            _ => Index::new(self.embedder.dim().unwrap_or(rxguard_core::embed::HASHING_DIM)),
        };
        let mut targets = Vec::new();
        for m in meds.iter().filter(|m| only.is_none_or(|id| id == m.id)) {
            index.remove_medication(&m.id);
            if let Ok(set) = self.store.get::<ChunkSet>(&m.smpc_doc_id) {
                targets.extend(set.chunks.into_iter().map(|c| (m.id.clone(), c)));
            }
        }
        let texts: Vec<String> = targets.iter().map(|(_, c)| c.text.clone()).collect();
        let vectors = embed_many::<f64>(&texts, self.embedder.as_ref(), self.config.embed_parallelism).await?;
        if let Some(v) = vectors.first() {
            if index.is_empty() && v.dim() != index.dim() {
                index = Index::new(v.dim());
            }
        }
        for ((medication_id, chunk), vector) in targets.iter().zip(vectors) {
            index.upsert(IndexEntry {
                chunk_id: chunk.chunk_id.clone(),
                medication_id: medication_id.clone(),
                vector,
            })?;
        }
        {
            let _w = self.lock_writer();
            index.save(&self.store.vectors_path(), &self.store.vectors_manifest_path())?;
        }
        self.reload_knowledge()?;
        let k = self.knowledge();
        let idx = k.index.as_ref().expect("index just saved");
        let medications = meds.iter().filter(|m| idx.count_for(&m.id) > 0).count();
        Ok(IndexSummary {
            chunks: idx.len(),
            medications,
            dim: idx.dim(),
        })
    }

    // -- ground truth ------------------------------------------------------

    pub fn import_truth(&self, path: &Path) -> Result<usize> {
        let rows: Vec<TruthEntry> = read_json(path)?;
        let entries = GroundTruthSet::from_entries(rows)?;
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("truth")
            .to_string();
        let n = entries.len();
        let _w = self.lock_writer();
        self.store.put(&TruthFile { id, entries })?;
        Ok(n)
    }

    pub fn ground_truth(&self) -> Result<GroundTruthSet> {
        Ok(self.store.ground_truth()?)
    }

    // -- assessments -------------------------------------------------------

    fn backend(&self, model_id: &str) -> Result<Arc<dyn CompletionBackend>> {
        self.backends
            .get(model_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownModel(model_id.to_string()))
    }

    /// Checks everything an assessment needs before any model call.
    pub fn preflight(&self, patient_id: &str, medication_id: &str, model_id: &str, rag: bool) -> Result<()> {
        let profile = self.profile(patient_id)?;
        let med = self.medication(medication_id)?;
        self.backend(model_id)?;
        if !profile.verified {
            return Err(EngineError::UnverifiedProfile(profile.id));
        }
        if rag && self.knowledge().indexed_chunks(&med.id) == 0 {
            return Err(EngineError::NotIndexed(med.id));
        }
        Ok(())
    }

    /// The exact prompt an assessment of this pair would send.
    pub async fn prompt_for(
        &self,
        patient_id: &str,
        medication_id: &str,
        rag: bool,
        k: usize,
    ) -> Result<(Prompt, Option<ContextBundle>)> {
        let profile = self.profile(patient_id)?;
        let med = self.medication(medication_id)?;
        let knowledge = self.knowledge();
        let context = if rag {
            let r = knowledge
                .retriever(self.embedder.as_ref())
                .ok_or_else(|| EngineError::NotIndexed(med.id.clone()))?;
            Some(r.retrieve_context(&profile, &med, k).await?)
        } else {
            None
        };
        Ok((assemble_prompt(&profile, &med, context.as_ref()), context))
    }

    /// Runs one assessment and archives the report.
    pub async fn assess(
        &self,
        patient_id: &str,
        medication_id: &str,
        model_id: &str,
        rag: bool,
        k: Option<usize>,
    ) -> Result<Assessment> {
        let profile = self.profile(patient_id)?;
        let med = self.medication(medication_id)?;
        let backend = self.backend(model_id)?;
        let knowledge = self.knowledge();
        let retriever = knowledge.retriever(self.embedder.as_ref());
        let req = AssessRequest {
            profile: &profile,
            medication: &med,
            rag,
            k: k.unwrap_or(self.config.retrieval_k),
            report_id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: Utc::now(),
        };
        let out = assess(req, backend.as_ref(), retriever.as_ref()).await?;
        self.archive(&out.report)?;
        Ok(out)
    }

    fn archive(&self, report: &SuitabilityReport) -> Result<()> {
        let problems = report.invariant_violations();
        if !problems.is_empty() {
            return Err(EngineError::ReportInvariant {
                id: report.id.clone(),
                detail: problems.join("; "),
            });
        }
        if let Some(f) = &report.failure {
            tracing::warn!(report = %report.id, failure = %f, "model output rejected; archived as invalid");
        }
        let _w = self.lock_writer();
        self.store.put(report)?;
        Ok(())
    }

    pub fn report(&self, id: &str) -> Result<SuitabilityReport> {
        Ok(self.store.get(id)?)
    }

    // -- experiments and metrics -------------------------------------------

    async fn run_with(
        &self,
        spec: &ExperimentSpec,
        backends: &HashMap<String, Arc<dyn CompletionBackend>>,
    ) -> Result<ExperimentOutcome> {
        let profiles: HashMap<String, PatientProfile> =
            self.profiles()?.into_iter().map(|p| (p.id.clone(), p)).collect();
        let catalog = self.catalog()?;
        let truth = self.ground_truth()?;
        let knowledge = self.knowledge();
        let ctx = ExperimentContext {
            profiles: &profiles,
            medications: &catalog,
            truth: &truth,
            backends,
            retriever: knowledge.retriever(self.embedder.as_ref()),
            concurrency: self.config.job_workers.max(1) * 2,
        };
        let outcome = run_experiment(spec, &ctx).await?;
        for r in &outcome.reports {
            self.archive(r)?;
        }
        Ok(outcome)
    }

    /// Runs the experiment matrix against the configured backends.
    pub async fn evaluate(&self, spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
        self.run_with(spec, &self.backends).await
    }

    /// Runs the matrix against live backends, archiving every response to
    /// `<store>/fixtures/<model>.jsonl` for later replay.
    pub async fn record_fixtures(&self, spec: &ExperimentSpec) -> Result<(ExperimentOutcome, Vec<PathBuf>)> {
        let mut backends: HashMap<String, Arc<dyn CompletionBackend>> = HashMap::new();
        let mut paths = Vec::new();
        for model in &spec.model_ids {
            let cfg = self
                .config
                .backends
                .iter()
                .find_map(|b| match b {
                    BackendSpec::Live(c) if &c.model_id == model => Some(c.clone()),
                    _ => None,
                })
                .ok_or_else(|| EngineError::UnknownModel(format!("{model} (no live backend configured)")))?;
            let path = self
                .store
                .fixtures_dir()
                .join(format!("{}.jsonl", rxguard_core::domain::slug(model)));
            let fixtures = Arc::new(FixtureStore::open(&path)?);
            backends.insert(
                model.clone(),
                Arc::new(RecordingBackend::new(LiveBackend::new(cfg)?, fixtures)),
            );
            paths.push(path);
        }
        let outcome = self.run_with(spec, &backends).await?;
        Ok((outcome, paths))
    }

    /// Metrics over every archived report (newest per pair and cell).
    pub fn metrics(&self, model_id: Option<&str>, rag: Option<bool>) -> Result<MetricsTable> {
        let reports = self.store.all::<SuitabilityReport>()?;
        let truth = self.ground_truth()?;
        Ok(metrics_from_reports(&reports, &truth, &[], &HashMap::new()).slice(model_id, rag))
    }

    // -- reviews -----------------------------------------------------------

    /// Stores a review; returns `true` when it replaced an earlier one.
    pub fn record_review(&self, review: &SubjectiveReview) -> Result<bool> {
        review.validate()?;
        let _w = self.lock_writer();
        let replaced = self.store.contains::<SubjectiveReview>(&review.storage_id());
        if replaced {
            tracing::warn!(
                reviewer = %review.reviewer_id,
                patient = %review.patient_id,
                model = %review.model_id,
                rag = review.rag_enabled,
                "review resubmitted; previous scores replaced"
            );
        }
        self.store.put(review)?;
        Ok(replaced)
    }

    pub fn import_reviews(&self, path: &Path) -> Result<usize> {
        let reviews: Vec<SubjectiveReview> = read_json(path)?;
        for r in &reviews {
            self.record_review(r)?;
        }
        Ok(reviews.len())
    }

    pub fn reviews(&self) -> Result<Vec<SubjectiveReview>> {
        Ok(self.store.all()?)
    }

    pub fn review_summary(&self, model_id: Option<&str>, rag: Option<bool>) -> Result<ReviewSummary<f64>> {
        Ok(summarize_reviews(&self.reviews()?, model_id, rag)?)
    }
}
