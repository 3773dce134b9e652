//! Embedding vectors, cosine similarity, and embedding providers.

use std::sync::OnceLock;
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{self, StreamExt, TryStreamExt};
use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;
use crate::http::{self, HttpError, RetryPolicy};
use crate::scalar::FloatScalar;

/// Dimension of the built-in hashing embedder.
pub const HASHING_DIM: usize = 256;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("text has no tokens to embed")]
    EmptyText,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding provider rejected the request: {0}")]
    ProviderRejected(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("vector has a non-finite component")]
    NonFinite,
}

/// A finite vector. Vectors produced by providers and stored in the index
/// are L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: FloatScalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self { values })
    }

    /// Builds the vector and scales it to unit L2 norm.
    pub fn normalized(values: Vec<T>) -> Result<Self, EmbedError> {
        Self::new(values)?.into_normalized()
    }

    pub fn into_normalized(mut self) -> Result<Self, EmbedError> {
        let n = self.norm();
        if n == T::zero() {
            return Err(EmbedError::ZeroVector);
        }
        for v in &mut self.values {
            *v = *v / n;
        }
        Ok(self)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> T {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn cast<U: FloatScalar>(&self) -> EmbeddingVector<U> {
        EmbeddingVector {
            values: self
                .values
                .iter()
                .map(|v| U::from(*v).unwrap_or_else(U::nan))
                .collect(),
        }
    }
}

/// Sequential left-to-right dot product.
pub fn dot<T: FloatScalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// `dot(a, b) / (|a| |b|)`. Cosine distance is `1 - similarity`.
pub fn cosine_similarity<T: FloatScalar>(
    a: &EmbeddingVector<T>,
    b: &EmbeddingVector<T>,
) -> Result<T, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(EmbedError::ZeroVector);
    }
    Ok(dot(&a.values, &b.values) / (na * nb))
}

/// Lowercases, then splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Deterministic bag-of-tokens embedder: each token adds 1 to component
/// `fnv1a64(token) mod dim`, and the counts are L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dim: HASHING_DIM }
    }
}

impl HashingEmbedder {
    pub fn embed<T: FloatScalar>(&self, text: &str) -> Result<EmbeddingVector<T>, EmbedError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut counts = vec![T::zero(); self.dim];
        for t in &tokens {
            let slot = (fnv1a64(t.as_bytes()) % self.dim as u64) as usize;
            counts[slot] = counts[slot] + T::one();
        }
        EmbeddingVector::normalized(counts)
    }
}

/// Source of raw embedding vectors. [`embed`] takes care of the empty-text
/// precondition and normalization.
#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Fixed output dimension, once known.
    fn dim(&self) -> Option<usize>;

    async fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

#[async_trait]
impl EmbeddingProvider for HashingEmbedder {
    fn name(&self) -> &str {
        "hashing"
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    async fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(HashingEmbedder::embed::<f64>(self, text)?.values)
    }
}

pub async fn embed<T: FloatScalar>(
    text: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<EmbeddingVector<T>, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let raw = provider.embed_raw(text).await?;
    EmbeddingVector::<f64>::normalized(raw)?.cast::<T>().into_normalized()
}

/// Embeds `texts` with at most `max_in_flight` provider calls outstanding.
/// Output order matches input order.
pub async fn embed_many<T: FloatScalar>(
    texts: &[String],
    provider: &dyn EmbeddingProvider,
    max_in_flight: usize,
) -> Result<Vec<EmbeddingVector<T>>, EmbedError> {
    stream::iter(texts.iter().map(|t| embed::<T>(t, provider)))
        .buffered(max_in_flight.max(1))
        .try_collect()
        .await
}

/// Hosted embedding endpoint: POST `{"model", "input"}`, answered with a
/// JSON array of numbers, `{"embedding": [...]}`, or
/// `{"data": [{"embedding": [...]}]}`. The dimension is learned on the first
/// call and pinned afterwards.
pub struct HttpEmbedder {
    client: reqwest::Client,
    endpoint: String,
    model: Option<String>,
    api_key: Option<String>,
    policy: RetryPolicy,
    dim: OnceLock<usize>,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    input: &'a str,
}

impl HttpEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        model: Option<String>,
        api_key: Option<String>,
        timeout: Duration,
        policy: RetryPolicy,
    ) -> Result<Self, EmbedError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            model,
            api_key,
            policy,
            dim: OnceLock::new(),
        })
    }

    fn extract(body: &serde_json::Value) -> Option<&Vec<serde_json::Value>> {
        body.as_array()
            .or_else(|| body.get("embedding").and_then(|v| v.as_array()))
            .or_else(|| {
                body.get("data")
                    .and_then(|d| d.get(0))
                    .and_then(|d| d.get("embedding"))
                    .and_then(|v| v.as_array())
            })
    }
}

#[async_trait]
impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        &self.endpoint
    }

    fn dim(&self) -> Option<usize> {
        self.dim.get().copied()
    }

    async fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let req = EmbedRequest {
            model: self.model.as_deref(),
            input: text,
        };
        let body = http::post_json(&self.client, &self.endpoint, self.api_key.as_deref(), &req, self.policy)
            .await
            .map_err(|e| match e {
                HttpError::Timeout { .. } | HttpError::Transport { .. } => {
                    EmbedError::ProviderUnavailable(e.to_string())
                }
                other => EmbedError::ProviderRejected(other.to_string()),
            })?;
        let values = Self::extract(&body)
            .ok_or_else(|| EmbedError::ProviderRejected("response carries no embedding array".into()))?
            .iter()
            .map(|v| v.as_f64().ok_or(EmbedError::NonFinite))
            .collect::<Result<Vec<f64>, _>>()?;
        let expected = *self.dim.get_or_init(|| values.len());
        if values.len() != expected {
            return Err(EmbedError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> EmbeddingVector<f64> {
        EmbeddingVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_similarity() {
        let a = v(&[0.3, -1.2, 4.0]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_similarity() {
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_similarity() {
        // (2 + 2 + 4) / (3 * 3)
        let s = cosine_similarity(&v(&[1.0, 2.0, 2.0]), &v(&[2.0, 1.0, 2.0])).unwrap();
        assert!((s - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn similarity_errors() {
        assert_eq!(
            cosine_similarity(&v(&[1.0, 0.0]), &v(&[1.0, 0.0, 0.0])),
            Err(EmbedError::DimensionMismatch { expected: 2, got: 3 })
        );
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(EmbedError::ZeroVector));
        assert_eq!(EmbeddingVector::new(vec![f64::NAN]), Err(EmbedError::NonFinite));
    }

    #[test]
    fn generic_over_f32() {
        let a = EmbeddingVector::<f32>::new(vec![1.0, 2.0, 2.0]).unwrap();
        let b = EmbeddingVector::<f32>::new(vec![2.0, 1.0, 2.0]).unwrap();
        assert!((cosine_similarity(&a, &b).unwrap() - 8.0 / 9.0).abs() < 1e-6);
    }

    #[test]
    fn tokenizer_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("Warfarin-Sodium 5mg, (oral)"), vec!["warfarin", "sodium", "5mg", "oral"]);
        assert!(tokenize(" -- ").is_empty());
    }

    #[tokio::test]
    async fn hashing_is_deterministic() {
        let e = HashingEmbedder::default();
        let a = embed::<f64>("warfarin", &e).await.unwrap();
        let b = embed::<f64>("warfarin", &e).await.unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), HASHING_DIM);
    }

    #[tokio::test]
    async fn empty_text_rejected() {
        let e = HashingEmbedder::default();
        assert_eq!(embed::<f64>("", &e).await, Err(EmbedError::EmptyText));
        assert_eq!(embed::<f64>("  ,;  ", &e).await, Err(EmbedError::EmptyText));
    }

    #[tokio::test]
    async fn embed_many_keeps_order() {
        let e = HashingEmbedder::default();
        let texts: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let all = embed_many::<f64>(&texts, &e, 2).await.unwrap();
        for (t, got) in texts.iter().zip(&all) {
            assert_eq!(got, &e.embed::<f64>(t).unwrap());
        }
    }
}
