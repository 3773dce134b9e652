//! Operator CLI and HTTP service around `rxguard-core`.

pub mod api;
pub mod config;
pub mod engine;

pub use api::{router, AppState};
pub use config::Config;
pub use engine::{Engine, EngineError};
