//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod common;

use std::panic::AssertUnwindSafe;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rxguard::{router, AppState, Engine};
use rxguard_core::domain::{InteractionClass, ReportStatus, Verdict};
use rxguard_core::embed::EmbeddingVector;
use rxguard_core::evaluation::{compute_metrics, ExperimentSpec, MetricsTable};
use rxguard_core::index::{IndexEntry, VectorIndex};
use rxguard_core::report::{parse_report, RunContext};
use rxguard_core::smpc::{chunk_document, parse_smpc, ChunkParams};
use rxguard_core::{ExactMetrics, Metrics};
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(name: &str, started: Instant, limit: Duration) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure!(took < limit, "{name} took {took:.2?}, limit {limit:?}");
    Ok(took)
}

// ---------------------------------------------------------------------------

fn retrieval_oracle() -> Outcome {
    let started = Instant::now();
    let dim = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    };
    let mut idx = VectorIndex::new(dim);
    let mut last = Vec::new();
    for i in 0..10_000 {
        // Every 250th entry repeats its predecessor so exact ties occur.
        let v = if i % 250 == 249 { last.clone() } else { uniform(&mut rng) };
        let chunk_id = format!("doc{:02}:Section:{:05}", i % 7, (i * 7_919) % 10_000);
        idx.upsert(IndexEntry {
            chunk_id,
            medication_id: "m".into(),
            vector: EmbeddingVector::normalized(v.clone()).map_err(|e| e.to_string())?,
        })
        .map_err(|e| e.to_string())?;
        last = v;
    }
    ensure!(idx.len() == 10_000, "index holds {} entries", idx.len());
    let stored: Vec<(String, Vec<f64>)> = idx
        .entries()
        .map(|e| (e.chunk_id.clone(), e.vector.values().to_vec()))
        .collect();
    let mut queries: Vec<Vec<f64>> = (0..98).map(|_| uniform(&mut rng)).collect();
    // Queries equal to a duplicated entry put the tie at rank 1.
    queries.push(stored[249].1.clone());
    queries.push(stored[4_999].1.clone());

    let mut ties_seen = 0;
    for q in &queries {
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut all: Vec<(&str, f64)> = stored
            .iter()
            .map(|(id, v)| {
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                (id.as_str(), d / (qn * vn))
            })
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
        ties_seen += all[..50].windows(2).filter(|w| w[0].1 == w[1].1).count();
        let query = EmbeddingVector::new(q.clone()).map_err(|e| e.to_string())?;
        for k in [1, 6, 50] {
            let got = idx.top_k(&query, k, None).map_err(|e| e.to_string())?;
            ensure!(got.len() == k, "k={k}: {} results", got.len());
            for (rank, (g, w)) in got.iter().zip(&all).enumerate() {
                ensure!(g.chunk_id == w.0, "k={k} rank {rank}: {} vs oracle {}", g.chunk_id, w.0);
                ensure!((g.similarity - w.1).abs() <= 1e-9, "k={k} rank {rank}: similarity {} vs {}", g.similarity, w.1);
            }
        }
    }
    ensure!(ties_seen >= 2, "tie-break path not exercised");
    let took = within("retrieval", started, Duration::from_secs(10))?;
    Ok(format!("10000 x 256, 100 queries, k in {{1,6,50}}, {ties_seen} exact ties, {took:.2?}"))
}

// ---------------------------------------------------------------------------

fn confusion_oracle(pairs: &[(Verdict, Verdict)]) -> Option<[f64; 4]> {
    let ix = |v: Verdict| match v {
        Verdict::Suitable => 0,
        Verdict::Risky => 1,
        Verdict::NA => 2,
    };
    let mut m = [[0u64; 3]; 2];
    for &(p, e) in pairs {
        if e != Verdict::NA {
            m[ix(e)][ix(p)] += 1;
        }
    }
    let n = m.iter().flatten().sum::<u64>() as f64;
    if n == 0.0 {
        return None;
    }
    let mut out = [(m[0][0] + m[1][1]) as f64 / n, 0.0, 0.0, 0.0];
    for l in 0..2 {
        let tp = m[l][l] as f64;
        let col = (m[0][l] + m[1][l]) as f64;
        let row = m[l].iter().sum::<u64>() as f64;
        let p = if col > 0.0 { tp / col } else { 0.0 };
        let r = if row > 0.0 { tp / row } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        out[1] += row / n * p;
        out[2] += row / n * r;
        out[3] += row / n * f;
    }
    Some(out)
}

fn metrics_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let verdicts = [Verdict::Suitable, Verdict::Risky, Verdict::NA];
    let mut checked = 0;
    for set in 0..1000 {
        let len = rng.random_range(0..80);
        let pairs: Vec<(Verdict, Verdict)> = (0..len)
            .map(|_| (verdicts[rng.random_range(0..3)], verdicts[rng.random_range(0..3)]))
            .collect();
        let class = InteractionClass::ALL[set % 8];
        match confusion_oracle(&pairs) {
            None => ensure!(compute_metrics::<f64>(class, &pairs).is_err(), "set {set}: expected EmptyPairs"),
            Some(want) => {
                let m: Metrics = compute_metrics(class, &pairs).map_err(|e| e.to_string())?;
                let got = [m.accuracy, m.precision, m.recall, m.f1];
                for (i, (g, w)) in got.iter().zip(want).enumerate() {
                    ensure!((g - w).abs() <= 1e-12, "set {set} metric {i}: {g} vs {w}");
                }
                let exact: ExactMetrics = compute_metrics(class, &pairs).map_err(|e| e.to_string())?;
                ensure!(exact.recall == exact.accuracy, "set {set}: weighted recall {} != accuracy {}", exact.recall, exact.accuracy);
                checked += 1;
            }
        }
    }
    // 17 of 20 right: accuracy and weighted recall both 0.85.
    let mut pairs = vec![(Verdict::Suitable, Verdict::Suitable); 14];
    pairs.extend([(Verdict::Risky, Verdict::Risky); 3]);
    pairs.extend([(Verdict::Risky, Verdict::Suitable), (Verdict::Suitable, Verdict::Risky), (Verdict::NA, Verdict::Risky)]);
    let age: ExactMetrics = compute_metrics(InteractionClass::Age, &pairs).map_err(|e| e.to_string())?;
    ensure!(age.accuracy == Ratio::new(17, 20) && age.recall == age.accuracy, "Age pattern: {age:?}");
    let took = within("metrics", started, Duration::from_secs(5))?;
    Ok(format!("{checked} non-empty sets within 1e-12, weighted recall == accuracy exactly, {took:.2?}"))
}

// ---------------------------------------------------------------------------

async fn golden_prompt(engine: &Engine) -> Outcome {
    let keys = [
        "Age", "Dose", "Comorbidities", "Contraindications", "Pregnancy", "Lactation", "Warnings", "Genetics",
        "Overall Suitability",
    ];
    for (rag, file) in [(false, "prompt_norag.txt"), (true, "prompt_rag.txt")] {
        let want = std::fs::read_to_string(common::fixtures().join("prompts").join(file)).map_err(|e| e.to_string())?;
        let (prompt, _) = engine.prompt_for("P001", "warfarin", rag, 6).await.map_err(|e| e.to_string())?;
        ensure!(prompt.rendered == want, "{file} differs from rendered prompt");
        let schema = &want[want.find("Output Format").ok_or("no schema block")?..];
        let pos: Vec<Option<usize>> = keys.iter().map(|k| schema.find(&format!("\"{k}\":"))).collect();
        ensure!(pos.iter().all(Option::is_some), "{file}: schema key missing");
        ensure!(pos.windows(2).all(|w| w[0] < w[1]), "{file}: schema keys out of order");
        ensure!(want.matches("--- SmPC CONTEXT ---").count() == usize::from(rag), "{file}: context block count");
    }
    Ok("no-RAG and RAG prompts byte-identical, 9 schema keys in order".into())
}

// ---------------------------------------------------------------------------

async fn end_to_end() -> Outcome {
    let started = Instant::now();
    let spec: ExperimentSpec = serde_json::from_str(
        &std::fs::read_to_string(common::fixtures().join("experiments/full.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        spec.patient_ids.len() == 25 && spec.medication_ids.len() == 5 && spec.rag_flags.len() == 2 && spec.model_ids.len() >= 2,
        "spec is not the full matrix"
    );
    let golden = MetricsTable::from_csv(
        &std::fs::read_to_string(common::fixtures().join("golden/metrics.csv")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;

    let mut csvs = Vec::new();
    let mut diff = 0.0f64;
    let mut reports = 0;
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let engine = common::fixture_engine(dir.path(), common::fixture_config()).await;
        let outcome = engine.evaluate(&spec).await.map_err(|e| e.to_string())?;
        ensure!(outcome.failures.is_empty(), "{} failed calls", outcome.failures.len());
        reports = outcome.reports.len();
        diff = diff.max(outcome.table.max_abs_diff(&golden).ok_or("table shape differs from golden")?);
        csvs.push(outcome.table.to_csv().map_err(|e| e.to_string())?);
    }
    ensure!(reports == 500, "{reports} reports");
    ensure!(diff <= 1e-9, "max abs diff vs golden {diff:e}");
    ensure!(csvs[0] == csvs[1], "two runs produced different tables");
    let took = within("end-to-end", started, Duration::from_secs(60))?;
    Ok(format!("{reports} reports x 2 runs, max diff {diff:e}, runs byte-identical, {took:.2?}"))
}

// ---------------------------------------------------------------------------

fn run_ctx() -> RunContext {
    RunContext {
        report_id: "fuzz".into(),
        patient_id: "P001".into(),
        medication_id: "warfarin".into(),
        model_id: "m".into(),
        rag_enabled: false,
        retrieved_chunk_ids: vec![],
        created_at: chrono::DateTime::UNIX_EPOCH,
    }
}

fn parser_robustness() -> Outcome {
    #[derive(serde::Deserialize)]
    struct Case {
        name: String,
        raw: String,
        expect: Value,
    }
    let cases: Vec<Case> = serde_json::from_str(
        &std::fs::read_to_string(common::fixtures().join("golden/parser_corpus.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(cases.len() == 50, "corpus has {} cases", cases.len());
    let ctx = run_ctx();
    for c in &cases {
        let r = parse_report(&c.raw, &ctx);
        let got = match (&r.status, &r.failure) {
            (ReportStatus::Valid, None) => json!({"status": "Valid"}),
            (ReportStatus::Invalid, Some(f)) => {
                let mut v = serde_json::to_value(f).map_err(|e| e.to_string())?;
                v["status"] = "Invalid".into();
                v
            }
            _ => return Err(format!("{}: status and failure disagree", c.name)),
        };
        ensure!(got == c.expect, "{}: expected {} got {}", c.name, c.expect, got);
        ensure!(r.raw_response == c.raw, "{}: raw response not preserved", c.name);
    }

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let alphabet = b"{}[]\":,.\\ \nAgeDoseGeneticsresultreasonscoreSuitableRiskyN/A0123456789-eE";
    let mut panics = 0;
    let mut buf = Vec::with_capacity(256);
    for i in 0..1_000_000u32 {
        buf.clear();
        let len = rng.random_range(0..256);
        let structured = i % 2 == 0;
        for _ in 0..len {
            buf.push(if structured && rng.random_bool(0.8) {
                alphabet[rng.random_range(0..alphabet.len())]
            } else {
                rng.random()
            });
        }
        let text = String::from_utf8_lossy(&buf);
        if std::panic::catch_unwind(AssertUnwindSafe(|| parse_report(&text, &ctx))).is_err() {
            panics += 1;
        }
    }
    ensure!(panics == 0, "{panics} panics while fuzzing");
    Ok(format!("50/50 corpus outcomes, 1000000 random inputs with 0 panics in {:.2?}", started.elapsed()))
}

// ---------------------------------------------------------------------------

fn chunk_coverage() -> Outcome {
    let params = ChunkParams::default();
    let mut total = 0;
    for name in common::MEDICATIONS {
        let id = name.to_lowercase();
        let text = std::fs::read_to_string(common::fixtures().join("smpc").join(format!("{id}.txt"))).map_err(|e| e.to_string())?;
        let doc = parse_smpc(&text, &id, name).map_err(|e| e.to_string())?;
        let first = chunk_document(&doc, params).map_err(|e| e.to_string())?;
        ensure!(first == chunk_document(&doc, params).map_err(|e| e.to_string())?, "{id}: chunking not deterministic");
        for (section, body) in &doc.sections {
            let n = body.chars().count();
            let spans: Vec<(usize, usize)> = first
                .iter()
                .filter(|c| c.section == *section)
                .map(|c| (c.char_start, c.char_end))
                .collect();
            ensure!(!spans.is_empty(), "{id} {section:?}: no chunks");
            ensure!(spans[0].0 == 0 && spans[spans.len() - 1].1 == n, "{id} {section:?}: does not span 0..{n}");
            for &(s, e) in &spans {
                ensure!(s < e && e - s <= params.window, "{id} {section:?}: window {s}..{e}");
            }
            for w in spans.windows(2) {
                ensure!(w[1].0 <= w[0].1 && w[1].0 > w[0].0, "{id} {section:?}: gap or stall at {:?}", w[1]);
            }
        }
        total += first.len();
    }
    Ok(format!("5 labels, {total} chunks, sections fully covered, windows <= 1000, deterministic"))
}

// ---------------------------------------------------------------------------

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .expect("request builds");
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.map(|b| b.to_bytes()).unwrap_or_default();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn service_contract(engine: Arc<Engine>) -> Outcome {
    let app = router(AppState::new(engine));
    let mut profile: Value = serde_json::from_str(
        &std::fs::read_to_string(common::fixtures().join("profiles/P004.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    profile["id"] = "P950".into();
    let mut bad = profile.clone();
    bad["age"] = json!(200);
    let review = |psda: i64| {
        json!({"reviewer_id": "r1", "patient_id": "P001", "model_id": "sim-alpha", "rag_enabled": false,
               "msa": 4, "did": 4, "psda": psda, "pss": 4, "ga": 4})
    };

    type Check<'a> = (&'a str, &'a str, Option<Value>, StatusCode, Option<&'a str>);
    let checks: Vec<Check> = vec![
        ("POST", "/patients", Some(profile), StatusCode::CREATED, None),
        ("POST", "/patients", Some(bad), StatusCode::UNPROCESSABLE_ENTITY, Some("InvalidProfile")),
        ("GET", "/patients", None, StatusCode::OK, None),
        ("GET", "/patients/P950", None, StatusCode::OK, None),
        ("GET", "/patients/P999", None, StatusCode::NOT_FOUND, Some("NotFound")),
        ("GET", "/medications", None, StatusCode::OK, None),
        ("POST", "/assessments", Some(json!({"patient_id": "P999", "medication_id": "warfarin", "model_id": "sim-alpha", "rag": true})), StatusCode::NOT_FOUND, Some("NotFound")),
        ("GET", "/assessments/unknown", None, StatusCode::NOT_FOUND, Some("NotFound")),
        ("POST", "/reviews", Some(review(0)), StatusCode::UNPROCESSABLE_ENTITY, Some("ScoreOutOfRange")),
        ("POST", "/reviews", Some(review(4)), StatusCode::CREATED, None),
        ("GET", "/metrics?model=sim-alpha&rag=true", None, StatusCode::OK, None),
        ("GET", "/metrics?rag=sometimes", None, StatusCode::BAD_REQUEST, Some("InvalidQuery")),
    ];
    let n = checks.len();
    for (method, uri, body, status, code) in checks {
        let (s, b) = call(&app, method, uri, body).await;
        ensure!(s == status, "{method} {uri}: {s} (want {status}) {b}");
        if let Some(code) = code {
            ensure!(b["code"] == code && b.get("message").is_some() && b.get("details").is_some(), "{method} {uri}: body {b}");
        }
    }

    let started = Instant::now();
    let (s, job) = call(
        &app,
        "POST",
        "/assessments",
        Some(json!({"patient_id": "P002", "medication_id": "levothyroxine", "model_id": "sim-beta", "rag": true})),
    )
    .await;
    ensure!(s == StatusCode::ACCEPTED, "POST /assessments: {s} {job}");
    let uri = format!("/assessments/{}", job["job_id"].as_str().ok_or("no job id")?);
    let done = loop {
        let (s, b) = call(&app, "GET", &uri, None).await;
        ensure!(s == StatusCode::OK, "GET {uri}: {s}");
        if b["state"] == "Done" || b["state"] == "Failed" {
            break b;
        }
        ensure!(started.elapsed() < Duration::from_secs(1), "job still {} after 1 s", b["state"]);
        tokio::time::sleep(Duration::from_millis(5)).await;
    };
    let took = started.elapsed();
    ensure!(done["state"] == "Done" && done["report"]["status"] == "Valid", "job ended as {done}");
    let ids = done["report"]["retrieved_chunk_ids"].as_array().map_or(0, Vec::len);
    let ctx = done["context"].as_array().map_or(0, Vec::len);
    ensure!(ids > 0 && ids == ctx, "report has {ids} chunk ids and {ctx} context chunks");

    let (s, metrics) = call(&app, "GET", "/metrics?model=sim-beta&rag=true", None).await;
    ensure!(s == StatusCode::OK && metrics["rows"].as_array().map_or(0, Vec::len) == 8, "metrics slice {metrics}");
    Ok(format!("{} endpoint checks, assessment Done with Valid report in {took:.2?}", n + 2))
}

// ---------------------------------------------------------------------------

fn report(name: &str, outcome: Outcome, failed: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(why) => {
            *failed += 1;
            println!("FAIL {name}: {why}");
        }
    }
}

fn main() {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    let mut failed = 0;
    report("retrieval oracle", retrieval_oracle(), &mut failed);
    report("metrics oracle", metrics_oracle(), &mut failed);
    let dir = tempfile::tempdir().expect("tempdir");
    let engine = Arc::new(rt.block_on(common::fixture_engine(dir.path(), common::fixture_config())));
    report("golden prompt", rt.block_on(golden_prompt(&engine)), &mut failed);
    report("end-to-end regression", rt.block_on(end_to_end()), &mut failed);
    report("report parser robustness", parser_robustness(), &mut failed);
    report("chunk coverage", chunk_coverage(), &mut failed);
    report("service contract", rt.block_on(service_contract(engine.clone())), &mut failed);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 7 acceptance criteria passed");
}
