//! A writer process killed mid-stream never leaves a torn entity behind.

use std::process::{Command, Stdio};
use std::time::Duration;

use rxguard_core::store::{atomic_write, Store};

const CHILD_ENV: &str = "RXGUARD_CRASH_CHILD_DIR";

fn payload(i: u64) -> String {
    let body = "x".repeat(200_000);
    format!("{{\"i\":{i},\"body\":\"{body}\"}}")
}

#[test]
fn crash_child_writer() {
    let Ok(dir) = std::env::var(CHILD_ENV) else {
        return;
    };
    let path = std::path::Path::new(&dir).join("entity.json");
    let mut i = 0;
    loop {
        atomic_write(&path, payload(i).as_bytes()).unwrap();
        i += 1;
    }
}

#[test]
fn killed_writer_leaves_whole_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("entity.json");
    atomic_write(&path, payload(0).as_bytes()).unwrap();
    let exe = std::env::current_exe().unwrap();
    for round in 0..5 {
        let mut child = Command::new(&exe)
            .args(["--exact", "crash_child_writer", "--nocapture", "--test-threads=1"])
            .env(CHILD_ENV, dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        std::thread::sleep(Duration::from_millis(60 + 40 * round));
        child.kill().unwrap();
        child.wait().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).expect("file is whole JSON");
        assert_eq!(text, payload(v["i"].as_u64().unwrap()));
    }
}

#[test]
fn store_reopens_after_init() {
    let dir = tempfile::tempdir().unwrap();
    Store::init(dir.path()).unwrap();
    assert!(Store::open(dir.path()).is_ok());
    assert!(Store::open(dir.path().join("missing")).is_err());
}
