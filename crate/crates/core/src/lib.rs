//! Prescription-suitability assessment over retrieved drug-label context.

pub mod domain;
pub mod embed;
pub mod evaluation;
pub mod gateway;
pub mod hash;
pub mod http;
pub mod index;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod scalar;
pub mod smpc;
pub mod store;

pub use scalar::{FloatScalar, MetricScalar};

pub type Embedding = embed::EmbeddingVector<f64>;
pub type Index = index::VectorIndex<f64>;
pub type ScoredChunk = index::ScoredChunk<f64>;
pub type Metrics = domain::ClassMetrics<f64>;
pub type ExactMetrics = domain::ClassMetrics<num_rational::Ratio<i64>>;
pub type Retriever<'a> = prompt::Retriever<'a, f64>;
