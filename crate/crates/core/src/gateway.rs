//! Completion backends: live HTTP chat endpoints and recorded replay.
//!
//! The gateway hands back whatever text the backend produced. It never
//! inspects or repairs it; that is the report parser's job.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use url::Url;

use crate::hash::fnv1a64_hex;
use crate::http::{self, HttpError, RetryPolicy};
use crate::prompt::Prompt;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("model {model_id}: request timed out")]
    Timeout { model_id: String },
    #[error("model {model_id}: transport failure: {message}")]
    TransportFailure { model_id: String, message: String },
    #[error("model {model_id}: authentication rejected (HTTP {status})")]
    AuthFailure { model_id: String, status: u16 },
    #[error("model {model_id}: unusable response: {message}")]
    BadResponse { model_id: String, message: String },
    #[error("no recorded response for model {model_id} and prompt hash {prompt_hash}")]
    FixtureMissing { model_id: String, prompt_hash: String },
    #[error("fixture storage failure: {0}")]
    StorageFailure(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
}

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    2
}
fn default_in_flight() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub model_id: String,
    pub endpoint: Url,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Extra request fields such as `temperature`. Empty means the
    /// backend's own defaults apply.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl BackendConfig {
    pub fn new(model_id: impl Into<String>, endpoint: Url) -> Self {
        Self {
            model_id: model_id.into(),
            endpoint,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            params: BTreeMap::new(),
            max_in_flight: default_in_flight(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.timeout_secs == 0 {
            return Err(GatewayError::InvalidConfig("timeout must be positive".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model_id must be non-empty".into()));
        }
        if let Some((k, _)) = self
            .params
            .iter()
            .find(|(_, v)| v.is_object() || v.is_array())
        {
            return Err(GatewayError::InvalidConfig(format!("param {k:?} must be a scalar")));
        }
        Ok(())
    }
}

/// Name of the environment variable holding a model's API key:
/// `RXGUARD_<MODEL>_KEY`, with the model id uppercased and every
/// non-alphanumeric character replaced by `_`.
pub fn api_key_var(model_id: &str) -> String {
    let model: String = model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("RXGUARD_{model}_KEY")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    /// FNV-1a 64 of the rendered prompt, 16 hex digits.
    pub prompt_hash: String,
    pub response_text: String,
    pub model_id: String,
    /// Milliseconds.
    pub latency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub record: CompletionRecord,
}

pub fn prompt_hash(prompt: &Prompt) -> String {
    fnv1a64_hex(prompt.rendered.as_bytes())
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    fn model_id(&self) -> &str;
    async fn complete(&self, prompt: &Prompt) -> Result<Completion, GatewayError>;
}

// ---------------------------------------------------------------------------
// Live backend
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    #[serde(flatten)]
    params: &'a BTreeMap<String, serde_json::Value>,
}

/// Chat endpoint speaking `POST {model, messages:[{role, content}]}` and
/// answering `{content}`. OpenAI-style `choices[0].message.content` is
/// accepted too.
pub struct LiveBackend {
    config: BackendConfig,
    client: reqwest::Client,
    policy: RetryPolicy,
    api_key: Option<String>,
    permits: Semaphore,
}

impl LiveBackend {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(api_key_var(&config.model_id)).ok();
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: BackendConfig, api_key: Option<String>) -> Result<Self, GatewayError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        let policy = RetryPolicy {
            max_retries: config.max_retries,
            ..RetryPolicy::default()
        };
        let permits = Semaphore::new(config.max_in_flight.max(1));
        Ok(Self {
            config,
            client,
            policy,
            api_key,
            permits,
        })
    }

    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.policy.backoff_base = base;
        self
    }

    fn content(body: &serde_json::Value) -> Option<&str> {
        body.get("content").and_then(|v| v.as_str()).or_else(|| {
            body.pointer("/choices/0/message/content")
                .and_then(|v| v.as_str())
        })
    }
}

#[async_trait]
impl CompletionBackend for LiveBackend {
    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    async fn complete(&self, prompt: &Prompt) -> Result<Completion, GatewayError> {
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| GatewayError::TransportFailure {
                model_id: self.config.model_id.clone(),
                message: e.to_string(),
            })?;
        let model_id = self.config.model_id.clone();
        let req = ChatRequest {
            model: &self.config.model_id,
            messages: [
                ChatMessage {
                    role: "system",
                    content: &prompt.system_text,
                },
                ChatMessage {
                    role: "user",
                    content: &prompt.user_text,
                },
            ],
            params: &self.config.params,
        };
        let started = Instant::now();
        let body = http::post_json(
            &self.client,
            self.config.endpoint.as_str(),
            self.api_key.as_deref(),
            &req,
            self.policy,
        )
        .await
        .map_err(|e| match e {
            HttpError::Timeout { .. } => GatewayError::Timeout {
                model_id: model_id.clone(),
            },
            HttpError::Transport { message, .. } => GatewayError::TransportFailure {
                model_id: model_id.clone(),
                message,
            },
            HttpError::Auth(status) => GatewayError::AuthFailure {
                model_id: model_id.clone(),
                status,
            },
            other => GatewayError::BadResponse {
                model_id: model_id.clone(),
                message: other.to_string(),
            },
        })?;
        let text = Self::content(&body)
            .ok_or_else(|| GatewayError::BadResponse {
                model_id: model_id.clone(),
                message: "response has no content field".into(),
            })?
            .to_string();
        let record = CompletionRecord {
            prompt_hash: prompt_hash(prompt),
            response_text: text.clone(),
            model_id,
            latency: started.elapsed().as_millis() as u64,
        };
        Ok(Completion { text, record })
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

/// Reads a JSON-lines fixture file. Later lines replace earlier ones with
/// the same (model, prompt hash).
pub fn read_fixtures(path: &Path) -> Result<Vec<CompletionRecord>, GatewayError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(GatewayError::StorageFailure(e.to_string())),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::StorageFailure(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CompletionRecord = serde_json::from_str(&line)
            .map_err(|e| GatewayError::StorageFailure(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Replays archived responses keyed by prompt hash. Never touches the network.
#[derive(Debug, Clone)]
pub struct RecordedBackend {
    model_id: String,
    records: HashMap<String, CompletionRecord>,
}

impl RecordedBackend {
    pub fn new(model_id: impl Into<String>, records: impl IntoIterator<Item = CompletionRecord>) -> Self {
        let model_id = model_id.into();
        let records = records
            .into_iter()
            .filter(|r| r.model_id == model_id)
            .map(|r| (r.prompt_hash.clone(), r))
            .collect();
        Self { model_id, records }
    }

    pub fn from_file(model_id: impl Into<String>, path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::new(model_id, read_fixtures(path)?))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[async_trait]
impl CompletionBackend for RecordedBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, prompt: &Prompt) -> Result<Completion, GatewayError> {
        let hash = prompt_hash(prompt);
        let record = self
            .records
            .get(&hash)
            .cloned()
            .ok_or_else(|| GatewayError::FixtureMissing {
                model_id: self.model_id.clone(),
                prompt_hash: hash,
            })?;
        Ok(Completion {
            text: record.response_text.clone(),
            record,
        })
    }
}

/// Append-only JSON-lines fixture file. Appends are serialized.
#[derive(Debug)]
pub struct FixtureStore {
    path: PathBuf,
    seen: Mutex<HashSet<(String, String)>>,
}

impl FixtureStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let path = path.into();
        let seen = read_fixtures(&path)?
            .into_iter()
            .map(|r| (r.model_id, r.prompt_hash))
            .collect();
        Ok(Self {
            path,
            seen: Mutex::new(seen),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record_fixture(
        &self,
        prompt: &Prompt,
        response_text: &str,
        model_id: &str,
        latency: u64,
    ) -> Result<CompletionRecord, GatewayError> {
        let record = CompletionRecord {
            prompt_hash: prompt_hash(prompt),
            response_text: response_text.to_string(),
            model_id: model_id.to_string(),
            latency,
        };
        self.append(&record)?;
        Ok(record)
    }

    pub fn append(&self, record: &CompletionRecord) -> Result<(), GatewayError> {
        let mut seen = self.seen.lock().unwrap_or_else(|e| e.into_inner());
        if !seen.insert((record.model_id.clone(), record.prompt_hash.clone())) {
            tracing::warn!(
                model_id = %record.model_id,
                prompt_hash = %record.prompt_hash,
                "fixture already recorded; the new response replaces it"
            );
        }
        let mut line = serde_json::to_string(record).map_err(|e| GatewayError::StorageFailure(e.to_string()))?;
        line.push('\n');
        let fail = |e: std::io::Error| GatewayError::StorageFailure(e.to_string());
        if let Some(dir) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(fail)?;
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(fail)?;
        f.write_all(line.as_bytes()).map_err(fail)?;
        f.sync_data().map_err(fail)?;
        Ok(())
    }
}

/// Wraps a backend and archives every successful completion.
pub struct RecordingBackend<B> {
    inner: B,
    store: Arc<FixtureStore>,
}

impl<B> RecordingBackend<B> {
    pub fn new(inner: B, store: Arc<FixtureStore>) -> Self {
        Self { inner, store }
    }
}

#[async_trait]
impl<B: CompletionBackend> CompletionBackend for RecordingBackend<B> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    async fn complete(&self, prompt: &Prompt) -> Result<Completion, GatewayError> {
        let done = self.inner.complete(prompt).await?;
        self.store.append(&done.record)?;
        Ok(done)
    }
}
