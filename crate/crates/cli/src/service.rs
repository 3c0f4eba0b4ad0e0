//! HTTP API over the answer chain.

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kbqa_core::generation::{AnswerError, QaPipeline, SystemAnswer};
use kbqa_core::retrieval::RetrievalParams;
use kbqa_core::stats::corpus_stats;
use kbqa_core::Error;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

pub const MAX_FETCH_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub question: String,
    #[serde(default = "default_true")]
    pub rag: bool,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_fetch_k")]
    pub fetch_k: usize,
}

fn default_true() -> bool {
    true
}

fn default_top_k() -> usize {
    5
}

fn default_fetch_k() -> usize {
    10
}

impl AskRequest {
    pub fn validate(&self) -> Result<(), String> {
        if self.question.trim().is_empty() {
            return Err("question must not be empty".into());
        }
        if !(1 <= self.top_k && self.top_k <= self.fetch_k && self.fetch_k <= MAX_FETCH_K) {
            return Err(format!(
                "need 1 <= top_k <= fetch_k <= {MAX_FETCH_K}, got top_k={} fetch_k={}",
                self.top_k, self.fetch_k
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextOut {
    pub chunk_id: String,
    pub text: String,
    pub source_path: String,
    pub sim_score: f64,
    pub rerank_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub retrieval_ms: u64,
    pub generation_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub answer: String,
    pub contexts: Vec<ContextOut>,
    pub used_rag: bool,
    pub rerank_degraded: bool,
    pub truncated: bool,
    pub model_id: String,
    pub timings: Timings,
}

impl From<SystemAnswer> for AskResponse {
    fn from(a: SystemAnswer) -> Self {
        Self {
            answer: a.answer,
            contexts: a
                .contexts
                .into_iter()
                .map(|c| ContextOut {
                    chunk_id: c.chunk_id,
                    text: c.text,
                    source_path: c.source_path,
                    sim_score: c.sim_score,
                    rerank_score: c.rerank_score,
                })
                .collect(),
            used_rag: a.used_rag,
            rerank_degraded: a.rerank_degraded,
            truncated: a.truncated,
            model_id: a.model_id,
            timings: Timings {
                retrieval_ms: a.retrieval_ms,
                generation_ms: a.generation_ms,
                total_ms: a.latency_ms,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub embedding: String,
    pub rerank: Option<String>,
    pub generation: String,
}

#[derive(Debug, Clone, Default)]
pub struct StatsPaths {
    pub clean: Option<PathBuf>,
    pub chunks: Option<PathBuf>,
    pub qa: Option<PathBuf>,
}

pub struct AppState {
    pub pipeline: QaPipeline,
    pub stats_paths: StatsPaths,
}

impl AppState {
    pub fn providers(&self) -> ProviderInfo {
        let p = &self.pipeline;
        ProviderInfo {
            embedding: p.embedder.describe(),
            rerank: p.reranker.as_ref().map(|r| r.describe()),
            generation: p.generator.describe(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub detail: String,
}

struct Failure(StatusCode, &'static str, String);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let body = ApiError {
            error: self.1.into(),
            detail: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

impl From<AnswerError> for Failure {
    fn from(e: AnswerError) -> Self {
        let detail = e.to_string();
        match e.error {
            Error::InvalidInput(_) => Failure(StatusCode::BAD_REQUEST, "validation", detail),
            Error::Empty(_) => Failure(StatusCode::SERVICE_UNAVAILABLE, "missing_artifact", detail),
            Error::Provider(_) => Failure(StatusCode::BAD_GATEWAY, "provider", detail),
            _ => Failure(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail),
        }
    }
}

async fn ask(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AskRequest>, JsonRejection>,
) -> Result<Json<AskResponse>, Failure> {
    let Json(req) = body.map_err(|e| Failure(StatusCode::BAD_REQUEST, "validation", e.body_text()))?;
    req.validate()
        .map_err(|d| Failure(StatusCode::BAD_REQUEST, "validation", d))?;
    let start = Instant::now();
    let p = &state.pipeline;
    let answer = if req.rag {
        let params = RetrievalParams {
            fetch_k: req.fetch_k,
            final_k: req.top_k,
            ..p.params
        };
        p.answer_with(&req.question, params).await?
    } else {
        p.answer_baseline(&req.question).await?
    };
    tracing::info!(
        rag = req.rag,
        contexts = answer.contexts.len(),
        elapsed_ms = start.elapsed().as_millis() as u64,
        "answered"
    );
    Ok(Json(answer.into()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub index_chunks: usize,
    pub providers: ProviderInfo,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        index_chunks: state.pipeline.kb.len(),
        providers: state.providers(),
    })
}

async fn stats(State(state): State<Arc<AppState>>) -> Result<Response, Failure> {
    let paths = state.stats_paths.clone();
    let s = tokio::task::spawn_blocking(move || corpus_stats(paths.clean.as_deref(), paths.chunks.as_deref(), paths.qa.as_deref()))
        .await
        .map_err(|e| Failure(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(|e| Failure(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(Json(s).into_response())
}

/// CORS is only attached when `dev_origin` is set.
pub fn router(state: Arc<AppState>, dev_origin: Option<&str>) -> Result<Router, String> {
    let mut app = Router::new()
        .route("/api/ask", post(ask))
        .route("/api/health", get(health))
        .route("/api/stats", get(stats))
        .with_state(state)
        .layer(TraceLayer::new_for_http());
    if let Some(origin) = dev_origin {
        let origin = HeaderValue::from_str(origin).map_err(|e| format!("bad ui origin {origin:?}: {e}"))?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

pub async fn serve(listener: TcpListener, app: Router, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}
