mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rxguard::{router, AppState};
use rxguard_core::evaluation::ExperimentSpec;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    engine: Arc<rxguard::Engine>,
    _dir: tempfile::TempDir,
}

async fn harness_with(config: rxguard::Config) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(common::fixture_engine(dir.path(), config).await);
    Harness {
        app: router(AppState::new(engine.clone())),
        engine,
        _dir: dir,
    }
}

async fn harness() -> Harness {
    harness_with(common::fixture_config()).await
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, Option<String>) {
    call_with(app, method, uri, body, None).await
}

async fn call_with(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
    token: Option<&str>,
) -> (StatusCode, Value, Option<String>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let location = resp
        .headers()
        .get(header::LOCATION)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value, location)
}

fn profile(id: &str) -> Value {
    let text = std::fs::read_to_string(common::fixtures().join("profiles/P002.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["id"] = id.into();
    v
}

fn review(psda: i64) -> Value {
    json!({
        "reviewer_id": "dr-a", "patient_id": "P001", "model_id": "sim-alpha", "rag_enabled": true,
        "msa": 4, "did": 5, "psda": psda, "pss": 4, "ga": 5,
        "created_at": "2024-06-01T10:00:00Z"
    })
}

async fn poll_done(app: &Router, location: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(1);
    loop {
        let (status, body, _) = call(app, "GET", location, None).await;
        assert_eq!(status, StatusCode::OK);
        if body["state"] == "Done" || body["state"] == "Failed" {
            return body;
        }
        assert!(Instant::now() < deadline, "job not finished within 1 s: {body}");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()));
    assert!(body.get("details").is_some());
}

#[tokio::test]
async fn health_and_fallback() {
    let h = harness().await;
    let (s, b, _) = call(&h.app, "GET", "/health", None).await;
    assert_eq!((s, b), (StatusCode::OK, json!({"status": "ok"})));
    let (s, b, _) = call(&h.app, "GET", "/nowhere", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&b, "NotFound");
}

#[tokio::test]
async fn patients_crud() {
    let h = harness().await;
    let (s, b, _) = call(&h.app, "POST", "/patients", Some(profile("P900"))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(b, json!({"id": "P900"}));

    let (s, b, _) = call(&h.app, "GET", "/patients/P900", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b["id"], "P900");

    let (s, b, _) = call(&h.app, "GET", "/patients", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b.as_array().unwrap().len(), 26);

    let (s, b, _) = call(&h.app, "GET", "/patients/P404", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&b, "NotFound");
}

#[tokio::test]
async fn invalid_profile_lists_violations() {
    let h = harness().await;
    let mut p = profile("P901");
    p["age"] = json!(-3);
    p["gender"] = json!("male");
    p["pregnancy_status"] = json!("pregnant");
    let (s, b, _) = call(&h.app, "POST", "/patients", Some(p)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&b, "InvalidProfile");
    let fields: Vec<&str> = b["details"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["field"].as_str().unwrap())
        .collect();
    assert!(fields.contains(&"age") && fields.contains(&"pregnancy_status"), "{fields:?}");

    let (s, b, _) = call(&h.app, "POST", "/patients", Some(json!({"id": "x"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(b["code"], "InvalidBody");
}

#[tokio::test]
async fn medications_and_models() {
    let h = harness().await;
    let (s, b, _) = call(&h.app, "GET", "/medications", None).await;
    assert_eq!(s, StatusCode::OK);
    let meds = b.as_array().unwrap();
    assert_eq!(meds.len(), 5);
    for m in meds {
        assert_eq!(m["smpc_available"], true, "{m}");
        assert!(m["indexed_chunks"].as_u64().unwrap() > 0);
    }
    let (s, b, _) = call(&h.app, "GET", "/models", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b, json!(["sim-alpha", "sim-beta"]));
}

#[tokio::test]
async fn assessment_happy_paths() {
    let h = harness().await;
    let started = Instant::now();
    let req = json!({"patient_id": "P001", "medication_id": "warfarin", "model_id": "sim-alpha", "rag": true});
    let (s, b, loc) = call(&h.app, "POST", "/assessments", Some(req)).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let loc = loc.expect("Location header");
    assert_eq!(loc, format!("/assessments/{}", b["job_id"].as_str().unwrap()));
    let job = poll_done(&h.app, &loc).await;
    assert!(started.elapsed() < Duration::from_secs(1));
    assert_eq!(job["state"], "Done", "{job}");
    assert_eq!(job["report"]["status"], "Valid");
    assert_eq!(job["report"]["checks"].as_object().unwrap().len(), 8);
    let ids = job["report"]["retrieved_chunk_ids"].as_array().unwrap();
    assert_eq!(ids.len(), 6);
    let context = job["context"].as_array().unwrap();
    assert_eq!(context.len(), ids.len());
    assert!(context.iter().all(|c| !c["text"].as_str().unwrap().is_empty()));

    let req = json!({"patient_id": "P001", "medication_id": "warfarin", "model_id": "sim-beta"});
    let (s, _, loc) = call(&h.app, "POST", "/assessments", Some(req)).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let job = poll_done(&h.app, &loc.unwrap()).await;
    assert_eq!(job["state"], "Done");
    assert_eq!(job["report"]["retrieved_chunk_ids"], json!([]));
    assert!(job.get("context").is_none());
    assert!(job.get("error").is_none());
}

#[tokio::test]
async fn assessment_errors() {
    let h = harness().await;
    let cases = [
        (json!({"patient_id": "P404", "medication_id": "warfarin", "model_id": "sim-alpha"}), StatusCode::NOT_FOUND, "NotFound"),
        (json!({"patient_id": "P001", "medication_id": "aspirin", "model_id": "sim-alpha"}), StatusCode::NOT_FOUND, "NotFound"),
        (json!({"patient_id": "P001", "medication_id": "warfarin", "model_id": "gpt-x"}), StatusCode::NOT_FOUND, "UnknownModel"),
        (json!({"patient_id": "P001"}), StatusCode::UNPROCESSABLE_ENTITY, "InvalidBody"),
    ];
    for (req, status, code) in cases {
        let (s, b, _) = call(&h.app, "POST", "/assessments", Some(req.clone())).await;
        assert_eq!(s, status, "{req}");
        assert_error(&b, code);
    }

    let mut p = profile("P902");
    p["verified"] = json!(false);
    assert_eq!(call(&h.app, "POST", "/patients", Some(p)).await.0, StatusCode::CREATED);
    let req = json!({"patient_id": "P902", "medication_id": "warfarin", "model_id": "sim-alpha"});
    let (s, b, _) = call(&h.app, "POST", "/assessments", Some(req)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&b, "UnverifiedProfile");

    let (s, b, _) = call(&h.app, "GET", "/assessments/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&b, "NotFound");
}

#[tokio::test]
async fn unrecorded_prompt_fails_job() {
    let h = harness().await;
    assert_eq!(call(&h.app, "POST", "/patients", Some(profile("P903"))).await.0, StatusCode::CREATED);
    let req = json!({"patient_id": "P903", "medication_id": "metformin", "model_id": "sim-alpha"});
    let (s, _, loc) = call(&h.app, "POST", "/assessments", Some(req)).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let job = poll_done(&h.app, &loc.unwrap()).await;
    assert_eq!(job["state"], "Failed");
    assert!(job["error"].as_str().unwrap().starts_with("FixtureMissing"), "{job}");
    assert!(job.get("report_id").is_none() && job.get("report").is_none());
}

#[tokio::test]
async fn reviews_and_summary() {
    let h = harness().await;
    let (s, b, _) = call(&h.app, "GET", "/reviews/summary", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&b, "NoReviews");

    let (s, b, _) = call(&h.app, "POST", "/reviews", Some(review(0))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&b, "ScoreOutOfRange");
    assert_eq!(b["details"], json!({"metric": "psda", "value": 0}));

    let (s, b, _) = call(&h.app, "POST", "/reviews", Some(review(3))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(b["replaced"], false);
    let (s, b, _) = call(&h.app, "POST", "/reviews", Some(review(5))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(b["replaced"], true);

    let (s, b, _) = call(&h.app, "GET", "/reviews", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b.as_array().unwrap().len(), 1);
    assert_eq!(b[0]["psda"], 5);

    let (s, b, _) = call(&h.app, "GET", "/reviews/summary?model=sim-alpha&rag=true", None).await;
    assert_eq!(s, StatusCode::OK);
    let text = b.to_string();
    assert!(text.contains("\"overall\":4.6"), "{text}");

    let (s, b, _) = call(&h.app, "GET", "/reviews/summary?rag=maybe", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error(&b, "InvalidQuery");
}

#[tokio::test]
async fn metrics_slices() {
    let h = harness().await;
    let (s, b, _) = call(&h.app, "GET", "/metrics", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b["rows"], json!([]));

    let spec = ExperimentSpec {
        model_ids: vec!["sim-alpha".into(), "sim-beta".into()],
        rag_flags: vec![false, true],
        patient_ids: (1..=5).map(|i| format!("P{i:03}")).collect(),
        medication_ids: vec!["warfarin".into(), "metformin".into()],
        k: 6,
    };
    let outcome = h.engine.evaluate(&spec).await.unwrap();

    let (s, b, _) = call(&h.app, "GET", "/metrics", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b["rows"].as_array().unwrap().len(), 32);
    let (_, b, _) = call(&h.app, "GET", "/metrics?model=sim-beta&rag=false", None).await;
    let rows = b["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["model_id"] == "sim-beta" && r["rag"] == false));
    let want = outcome.table.slice(Some("sim-beta"), Some(false));
    assert_eq!(serde_json::to_value(&want).unwrap()["rows"], b["rows"]);
}

#[tokio::test]
async fn api_token_is_enforced() {
    let mut config = common::fixture_config();
    config.api_token = Some("s3cret".into());
    let h = harness_with(config).await;
    let (s, b, _) = call(&h.app, "GET", "/patients", None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_error(&b, "Unauthorized");
    let (s, _, _) = call_with(&h.app, "GET", "/patients", None, Some("wrong")).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _, _) = call_with(&h.app, "GET", "/patients", None, Some("s3cret")).await;
    assert_eq!(s, StatusCode::OK);
}
