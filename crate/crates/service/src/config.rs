//! Service configuration file.
//!
//! ```json
//! {
//!   "backends": [
//!     {"kind": "recorded", "model_id": "sim-alpha", "fixtures": "recorded/sim-alpha.jsonl"},
//!     {"kind": "live", "model_id": "gpt-4", "endpoint": "https://llm.example/v1/chat"}
//!   ],
//!   "embedding": {"kind": "hashing"},
//!   "retrieval_k": 6,
//!   "chunking": {"window": 1000, "overlap": 200}
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! API keys come from `RXGUARD_<MODEL>_KEY`, never from the file.

use std::path::{Path, PathBuf};

use rxguard_core::gateway::BackendConfig;
use rxguard_core::prompt::DEFAULT_K;
use rxguard_core::smpc::ChunkParams;
use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Live(BackendConfig),
    Recorded { model_id: String, fixtures: PathBuf },
}

impl BackendSpec {
    pub fn model_id(&self) -> &str {
        match self {
            BackendSpec::Live(c) => &c.model_id,
            BackendSpec::Recorded { model_id, .. } => model_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbeddingSpec {
    Hashing,
    Http {
        endpoint: Url,
        #[serde(default)]
        model: Option<String>,
        #[serde(default = "default_embed_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_embed_retries")]
        max_retries: u32,
    },
}

fn default_embed_timeout() -> u64 {
    30
}
fn default_embed_retries() -> u32 {
    2
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_workers() -> usize {
    4
}
fn default_embed_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default)]
    pub backends: Vec<BackendSpec>,
    #[serde(default = "default_embedding")]
    pub embedding: EmbeddingSpec,
    #[serde(default = "default_k")]
    pub retrieval_k: usize,
    #[serde(default)]
    pub chunking: ChunkParams,
    /// When set, every HTTP request must carry `Authorization: Bearer <token>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_token: Option<String>,
    /// Assessment jobs executing at once.
    #[serde(default = "default_workers")]
    pub job_workers: usize,
    /// Embedding calls in flight while indexing.
    #[serde(default = "default_embed_parallelism")]
    pub embed_parallelism: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_embedding() -> EmbeddingSpec {
    EmbeddingSpec::Hashing
}

impl Default for Config {
    fn default() -> Self {
        Self {
            backends: Vec::new(),
            embedding: EmbeddingSpec::Hashing,
            retrieval_k: DEFAULT_K,
            chunking: ChunkParams::default(),
            api_token: None,
            job_workers: default_workers(),
            embed_parallelism: default_embed_parallelism(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg: Config = serde_json::from_str(&text).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.retrieval_k == 0 {
            return Err(ConfigError::Invalid("retrieval_k must be at least 1".into()));
        }
        if self.chunking.overlap >= self.chunking.window {
            return Err(ConfigError::Invalid("chunking overlap must be below window".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &self.backends {
            if !seen.insert(b.model_id()) {
                return Err(ConfigError::Invalid(format!("model {:?} configured twice", b.model_id())));
            }
            if let BackendSpec::Live(c) = b {
                c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
