use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rxguard_core::domain::ReportStatus;
use rxguard_core::report::{parse_report, RunContext};
use serde::Deserialize;
use serde_json::Value;

#[derive(Deserialize)]
struct Case {
    name: String,
    raw: String,
    expect: Value,
}

fn ctx() -> RunContext {
    RunContext {
        report_id: "r".into(),
        patient_id: "P001".into(),
        medication_id: "warfarin".into(),
        model_id: "m".into(),
        rag_enabled: false,
        retrieved_chunk_ids: vec![],
        created_at: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
    }
}

#[test]
fn corpus_outcomes() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/golden/parser_corpus.json")).unwrap();
    let cases: Vec<Case> = serde_json::from_str(&text).unwrap();
    assert_eq!(cases.len(), 50);
    let mut wrong = Vec::new();
    for c in &cases {
        let r = parse_report(&c.raw, &ctx());
        let got = match (&r.status, &r.failure) {
            (ReportStatus::Valid, None) => serde_json::json!({"status": "Valid"}),
            (ReportStatus::Invalid, Some(f)) => {
                let mut v = serde_json::to_value(f).unwrap();
                v["status"] = "Invalid".into();
                v
            }
            other => panic!("{}: inconsistent report {other:?}", c.name),
        };
        if got != c.expect {
            wrong.push(format!("{}: expected {} got {}", c.name, c.expect, got));
        }
        if r.status == ReportStatus::Valid {
            assert_eq!(r.checks.len(), 8, "{}", c.name);
            assert!(r.overall.is_some());
        }
    }
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn random_bytes_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet = b"{}[]\":,. \n\\abcdefgAgeDoseResultSuitableRiskyN/A0123456789-e";
    for _ in 0..20_000 {
        let len = rng.random_range(0..200);
        let bytes: Vec<u8> = (0..len)
            .map(|_| {
                if rng.random_bool(0.5) {
                    alphabet[rng.random_range(0..alphabet.len())]
                } else {
                    rng.random()
                }
            })
            .collect();
        let r = parse_report(&String::from_utf8_lossy(&bytes), &ctx());
        assert_eq!(r.status == ReportStatus::Valid, r.failure.is_none());
    }
}
