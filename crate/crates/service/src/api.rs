//! HTTP routes.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crowdopt_core::guidance::DragConfig;
use crowdopt_core::linesearch::OptConfig;
use crowdopt_core::photo::Image;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Result, ServiceError};
use crate::events::{write_event, Answer, ModeConfig, SessionSpec};
use crate::render::{parse_params, render_design};
use crate::session::{Domain, EstimateConfig, Mode, SUGGESTION_COUNT, SUGGESTION_SAMPLES};
use crate::simulate::{simulate, SimulateRequest};
use crate::store::Store;

/// Profile resolution when the request does not give one.
const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// Photo shown at identity parameters.
    pub base_image: Arc<Image>,
}

impl AppState {
    pub fn new(store: Store, base_image: Image) -> Self {
        Self { store: Arc::new(store), base_image: Arc::new(base_image) }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub mode: Mode,
    pub domain: Domain,
    #[serde(default)]
    pub seed: u64,
    /// Dimension of synthetic spaces; 2 when absent.
    pub n: Option<usize>,
    /// `OptConfig` or `EstimateConfig` depending on `mode`; omitted fields
    /// take their defaults.
    pub config: Option<serde_json::Value>,
}

impl CreateRequest {
    pub fn into_spec(self) -> Result<SessionSpec> {
        let n = match (self.domain.fixed_dim(), self.n) {
            (Some(d), Some(n)) if n != d => {
                return Err(ServiceError::Validation(format!("domain requires n = {d}, got {n}")));
            }
            (Some(d), _) => d,
            (None, n) => n.unwrap_or(2),
        };
        let raw = self.config.unwrap_or_else(|| serde_json::json!({}));
        let config = match self.mode {
            Mode::Optimize => ModeConfig::Optimize(from_value::<OptConfig>(raw)?),
            Mode::Estimate => ModeConfig::Estimate(from_value::<EstimateConfig>(raw)?),
        };
        Ok(SessionSpec { domain: self.domain, n, seed: self.seed, config })
    }
}

fn from_value<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| ServiceError::Validation(format!("config: {e}")))
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Validation(format!("body: {e}")))
}

fn query_value<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
    match q.get(key) {
        Some(v) => v.parse().map_err(|_| ServiceError::Validation(format!("query parameter {key}={v:?} is invalid"))),
        None => default.ok_or_else(|| ServiceError::Validation(format!("query parameter {key} is required"))),
    }
}

/// Runs CPU-bound session work off the async executor.
async fn blocking<R: Send + 'static>(f: impl FnOnce() -> Result<R> + Send + 'static) -> Result<R> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker thread failed: {e}")))?
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<Response> {
    let spec = parse_body::<CreateRequest>(&body)?.into_spec()?;
    let summary = blocking(move || app.store.create(spec).map(|s| s.summary())).await?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    Ok(Json(app.store.read(&id, |s| Ok(s.summary()))?).into_response())
}

async fn get_log(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let text = app.store.read(&id, |s| {
        let mut out = Vec::new();
        for ev in s.events() {
            write_event(&mut out, ev)?;
        }
        Ok(out)
    })?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn next_task(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response> {
    let worker: String = query_value(&q, "worker", None)?;
    let task = app.store.read(&id, |s| Ok(s.next_task(&worker)))?;
    Ok(match task {
        Some(t) => Json(t).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub task_id: String,
    pub worker: String,
    pub answer: Answer,
}

async fn submit(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response> {
    let req: SubmitRequest = parse_body(&body)?;
    let ack = blocking(move || app.store.update(&id, |s| s.submit(&req.task_id, &req.worker, req.answer))).await?;
    Ok(Json(ack).into_response())
}

async fn suggestions(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response> {
    let samples = query_value(&q, "samples", Some(SUGGESTION_SAMPLES))?;
    let k = query_value(&q, "k", Some(SUGGESTION_COUNT))?;
    Ok(Json(app.store.read(&id, |s| s.suggestions(samples, k))?).into_response())
}

async fn visopt(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response> {
    let current = parse_params(&query_value::<String>(&q, "current", None)?)?;
    let dim = query_value(&q, "dim", None)?;
    let resolution = query_value(&q, "resolution", Some(DEFAULT_RESOLUTION))?;
    Ok(Json(app.store.read(&id, |s| s.visopt(&current, dim, resolution))?).into_response())
}

#[derive(Debug, Clone, Deserialize)]
pub struct DragRequest {
    pub current: Vec<f64>,
    pub dim: usize,
    pub value: f64,
    #[serde(flatten)]
    pub config: DragConfig,
}

async fn drag(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response> {
    let req: DragRequest = parse_body(&body)?;
    Ok(Json(app.store.read(&id, |s| s.drag(&req.current, req.dim, req.value, &req.config))?).into_response())
}

async fn run_simulation(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response> {
    let req: SimulateRequest = if body.is_empty() { SimulateRequest::default() } else { parse_body(&body)? };
    let summary = blocking(move || {
        app.store.update(&id, |s| {
            simulate(s, &req)?;
            Ok(s.summary())
        })
    })
    .await?;
    Ok(Json(summary).into_response())
}

async fn render(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Result<Response> {
    let domain = match q.get("domain").map(String::as_str) {
        Some("photo") => Domain::Photo,
        Some("synthetic") => Domain::Synthetic,
        Some(other) => return Err(ServiceError::Validation(format!("unknown domain {other:?}"))),
        None => return Err(ServiceError::Validation("query parameter domain is required".into())),
    };
    let params = parse_params(&query_value::<String>(&q, "params", None)?)?;
    let png = blocking(move || render_design(domain, &params, &app.base_image)).await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/log", get(get_log))
        .route("/sessions/{id}/task", get(next_task))
        .route("/sessions/{id}/responses", post(submit))
        .route("/sessions/{id}/suggestions", get(suggestions))
        .route("/sessions/{id}/visopt", get(visopt))
        .route("/sessions/{id}/drag", post(drag))
        .route("/sessions/{id}/simulate", post(run_simulation))
        .route("/render", get(render))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state)).await
}
