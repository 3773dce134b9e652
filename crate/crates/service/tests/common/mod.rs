#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rxguard::{Config, Engine};
use rxguard_core::store::Store;

pub const MEDICATIONS: [&str; 5] = ["Warfarin", "Metformin", "Levothyroxine", "Lisinopril", "Omeprazole"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_config() -> Config {
    Config::load(&fixtures().join("config.json")).unwrap()
}

/// A store with the fixture labels indexed and the fixture profiles and
/// truth imported, wired to the recorded backends.
pub async fn fixture_engine(root: &Path, config: Config) -> Engine {
    Store::init(root).unwrap();
    let engine = Engine::open(root, config).unwrap();
    for name in MEDICATIONS {
        let file = fixtures().join("smpc").join(format!("{}.txt", name.to_lowercase()));
        engine.ingest_smpc(&file, name).unwrap();
    }
    engine.index(None).await.unwrap();
    engine.import_profiles(&fixtures().join("profiles")).unwrap();
    engine.import_truth(&fixtures().join("truth/truth.json")).unwrap();
    engine
}
