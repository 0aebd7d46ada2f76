use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fasa_core::review::VerifyDecision;
use serde::Deserialize;
use tower_http::services::ServeDir;

use crate::queue::{ReviewQueue, ServiceError, StatusFilter, DEFAULT_PAGE_SIZE};

const MAX_PAGE_SIZE: usize = 500;

type Shared = Arc<Mutex<ReviewQueue>>;

pub fn router(queue: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/items", get(list_items))
        .route("/api/items/{id}", get(get_item))
        .route("/api/audio/{id}", get(get_audio))
        .route("/api/decisions", post(post_decision))
        .route("/api/export", post(export))
        .with_state(queue);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            ServiceError::UnknownId(_) => (StatusCode::NOT_FOUND, "unknown_id"),
            ServiceError::AlreadyDecided { .. } => (StatusCode::CONFLICT, "already_decided"),
            ServiceError::MissingManualText(_) => (StatusCode::UNPROCESSABLE_ENTITY, "missing_manual_text"),
            ServiceError::BadPage => (StatusCode::BAD_REQUEST, "bad_page"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        let body = serde_json::json!({ "error": kind, "message": self.0.to_string() });
        (status, Json(body)).into_response()
    }
}

fn bad_request(kind: &str, message: String) -> Response {
    let body = serde_json::json!({ "error": kind, "message": message });
    (StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response()
}

/// Runs queue work off the async workers: decisions block on fsync.
async fn with_queue<T: Send + 'static>(
    queue: Shared,
    f: impl FnOnce(&mut ReviewQueue) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || {
        let mut q = queue.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        f(&mut q)
    })
    .await
    .expect("queue task panicked")
    .map_err(ApiError)
}

#[derive(Deserialize)]
struct ListQuery {
    #[serde(default)]
    status: StatusFilter,
    page: Option<usize>,
    page_size: Option<usize>,
}

async fn list_items(State(q): State<Shared>, Query(query): Query<ListQuery>) -> Result<Response, ApiError> {
    let page = query.page.unwrap_or(1);
    let size = query.page_size.unwrap_or(DEFAULT_PAGE_SIZE).min(MAX_PAGE_SIZE);
    let listing = with_queue(q, move |q| q.list(query.status, page, size)).await?;
    Ok(Json(listing).into_response())
}

async fn get_item(State(q): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = with_queue(q, move |q| q.get(&id)).await?;
    Ok(Json(view).into_response())
}

async fn get_audio(State(q): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bytes = with_queue(q, move |q| {
        let path = q.audio_path(&id)?;
        std::fs::read(&path).map_err(|source| ServiceError::Io { path, source })
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

async fn post_decision(
    State(q): State<Shared>,
    body: Result<Json<VerifyDecision>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(decision) = match body {
        Ok(b) => b,
        Err(rejection) => return Ok(bad_request("bad_request", rejection.body_text())),
    };
    let view = with_queue(q, move |q| q.decide(decision)).await?;
    Ok(Json(view).into_response())
}

async fn export(State(q): State<Shared>) -> Result<Response, ApiError> {
    let summary = with_queue(q, |q| q.export()).await?;
    Ok(Json(summary).into_response())
}
