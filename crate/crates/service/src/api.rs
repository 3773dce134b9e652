//! HTTP API.
//!
//! Every error response carries `{"code", "message", "details"}`.
//! Assessments run as background jobs: `POST /assessments` answers 202 with
//! a job id, and `GET /assessments/{job_id}` reports progress and, once
//! done, the report together with the retrieved SmPC passages.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use rxguard_core::domain::{DomainError, PatientProfile, SubjectiveReview, SuitabilityReport};
use rxguard_core::evaluation::EvalError;
use rxguard_core::prompt::ContextChunk;
use rxguard_core::store::StoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use crate::engine::{Engine, EngineError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
            details: Value::Null,
        }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::NotFound { .. } | EngineError::UnknownModel(_) => StatusCode::NOT_FOUND,
            EngineError::InvalidProfile(_)
            | EngineError::UnverifiedProfile(_)
            | EngineError::Domain(_)
            | EngineError::Eval(EvalError::InvalidSpec(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::Eval(EvalError::NoReviews) => StatusCode::NOT_FOUND,
            EngineError::NotIndexed(_) => StatusCode::CONFLICT,
            EngineError::Store(StoreError::InvalidId(_)) => StatusCode::BAD_REQUEST,
            EngineError::Gateway(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            EngineError::InvalidProfile(v) => json!({ "violations": v }),
            EngineError::NotFound { kind, id } => json!({ "kind": kind, "id": id }),
            EngineError::Domain(DomainError::ScoreOutOfRange { metric, value }) => {
                json!({ "metric": metric, "value": value })
            }
            _ => Value::Null,
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        ApiError::new(status, e.code(), e.to_string()).with_details(details)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let status = match r.status() {
            StatusCode::UNSUPPORTED_MEDIA_TYPE => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            StatusCode::BAD_REQUEST => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, "InvalidBody", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidQuery", r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

// ---------------------------------------------------------------------------
// Jobs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentJob {
    pub job_id: String,
    pub patient_id: String,
    pub medication_id: String,
    pub model_id: String,
    pub rag_enabled: bool,
    pub state: JobState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct JobEntry {
    job: AssessmentJob,
    context: Vec<ContextChunk>,
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    jobs: Arc<Mutex<HashMap<String, JobEntry>>>,
    workers: Arc<Semaphore>,
    token: Option<String>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Self {
        let workers = engine.config().job_workers.max(1);
        let token = engine.config().api_token.clone();
        Self {
            engine,
            jobs: Arc::default(),
            workers: Arc::new(Semaphore::new(workers)),
            token,
        }
    }

    fn update(&self, job_id: &str, f: impl FnOnce(&mut JobEntry)) {
        let mut jobs = self.jobs.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(entry) = jobs.get_mut(job_id) {
            f(entry);
        }
    }
}

async fn run_job(state: AppState, job: AssessmentJob) {
    let Ok(_permit) = state.workers.clone().acquire_owned().await else {
        return;
    };
    state.update(&job.job_id, |e| e.job.state = JobState::Running);
    let out = state
        .engine
        .assess(&job.patient_id, &job.medication_id, &job.model_id, job.rag_enabled, None)
        .await;
    state.update(&job.job_id, |e| match out {
        Ok(a) => {
            e.job.state = JobState::Done;
            e.job.report_id = Some(a.report.id);
            e.context = a.context.map(|c| c.chunks).unwrap_or_default();
        }
        Err(err) => {
            tracing::warn!(job = %job.job_id, error = %err, "assessment job failed");
            e.job.state = JobState::Failed;
            e.job.error = Some(format!("{}: {err}", err.code()));
        }
    });
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_patient(
    State(st): State<AppState>,
    body: Result<Json<PatientProfile>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(profile) = body?;
    st.engine.put_profile(&profile)?;
    Ok((StatusCode::CREATED, Json(json!({ "id": profile.id }))))
}

async fn list_patients(State(st): State<AppState>) -> ApiResult<Json<Vec<PatientProfile>>> {
    Ok(Json(st.engine.profiles()?))
}

async fn get_patient(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<PatientProfile>> {
    Ok(Json(st.engine.profile(&id)?))
}

async fn list_medications(State(st): State<AppState>) -> ApiResult<Json<Value>> {
    Ok(Json(json!(st.engine.medications()?)))
}

async fn list_models(State(st): State<AppState>) -> Json<Vec<String>> {
    Json(st.engine.model_ids())
}

#[derive(Debug, Deserialize)]
struct AssessmentRequest {
    patient_id: String,
    medication_id: String,
    model_id: String,
    #[serde(default)]
    rag: bool,
}

async fn create_assessment(
    State(st): State<AppState>,
    body: Result<Json<AssessmentRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, [(header::HeaderName, String); 1], Json<AssessmentJob>)> {
    let Json(req) = body?;
    st.engine
        .preflight(&req.patient_id, &req.medication_id, &req.model_id, req.rag)?;
    let job = AssessmentJob {
        job_id: uuid::Uuid::new_v4().simple().to_string(),
        patient_id: req.patient_id,
        medication_id: req.medication_id,
        model_id: req.model_id,
        rag_enabled: req.rag,
        state: JobState::Pending,
        report_id: None,
        error: None,
    };
    st.jobs.lock().unwrap_or_else(|e| e.into_inner()).insert(
        job.job_id.clone(),
        JobEntry {
            job: job.clone(),
            context: Vec::new(),
        },
    );
    tokio::spawn(run_job(st.clone(), job.clone()));
    let location = format!("/assessments/{}", job.job_id);
    Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(job)))
}

#[derive(Debug, Serialize)]
struct JobView {
    #[serde(flatten)]
    job: AssessmentJob,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<SuitabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<Vec<ContextChunk>>,
}

async fn get_assessment(State(st): State<AppState>, Path(job_id): Path<String>) -> ApiResult<Json<JobView>> {
    let (job, context) = {
        let jobs = st.jobs.lock().unwrap_or_else(|e| e.into_inner());
        let entry = jobs.get(&job_id).ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("job {job_id:?} not found"))
                .with_details(json!({ "kind": "job", "id": job_id }))
        })?;
        (entry.job.clone(), entry.context.clone())
    };
    let report = match &job.report_id {
        Some(id) => Some(st.engine.report(id)?),
        None => None,
    };
    let context = report.as_ref().filter(|r| r.rag_enabled).map(|_| context);
    Ok(Json(JobView { job, report, context }))
}

#[derive(Debug, Deserialize)]
struct ReviewInput {
    reviewer_id: String,
    patient_id: String,
    model_id: String,
    rag_enabled: bool,
    msa: i64,
    did: i64,
    psda: i64,
    pss: i64,
    ga: i64,
    #[serde(default)]
    notes: Option<String>,
    #[serde(default)]
    created_at: Option<DateTime<Utc>>,
}

async fn create_review(
    State(st): State<AppState>,
    body: Result<Json<ReviewInput>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(r) = body?;
    let review = SubjectiveReview {
        reviewer_id: r.reviewer_id,
        patient_id: r.patient_id,
        model_id: r.model_id,
        rag_enabled: r.rag_enabled,
        msa: r.msa,
        did: r.did,
        psda: r.psda,
        pss: r.pss,
        ga: r.ga,
        notes: r.notes,
        created_at: r.created_at.unwrap_or_else(Utc::now),
    };
    let replaced = st.engine.record_review(&review)?;
    Ok((StatusCode::CREATED, Json(json!({ "replaced": replaced, "review": review }))))
}

async fn list_reviews(State(st): State<AppState>) -> ApiResult<Json<Vec<SubjectiveReview>>> {
    Ok(Json(st.engine.reviews()?))
}

#[derive(Debug, Deserialize)]
struct SliceQuery {
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    rag: Option<bool>,
}

impl SliceQuery {
    fn model(&self) -> Option<&str> {
        self.model.as_deref().filter(|m| !m.is_empty())
    }
}

async fn review_summary(
    State(st): State<AppState>,
    q: Result<Query<SliceQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(q) = q?;
    Ok(Json(json!(st.engine.review_summary(q.model(), q.rag)?)))
}

async fn metrics(State(st): State<AppState>, q: Result<Query<SliceQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let Query(q) = q?;
    Ok(Json(json!(st.engine.metrics(q.model(), q.rag)?)))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

async fn require_token(State(st): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|v| v == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong API token")
                .into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/patients", post(create_patient).get(list_patients))
        .route("/patients/{id}", get(get_patient))
        .route("/medications", get(list_medications))
        .route("/models", get(list_models))
        .route("/assessments", post(create_assessment))
        .route("/assessments/{job_id}", get(get_assessment))
        .route("/reviews", post(create_review).get(list_reviews))
        .route("/reviews/summary", get(review_summary))
        .route("/metrics", get(metrics))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

pub async fn serve(engine: Arc<Engine>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
