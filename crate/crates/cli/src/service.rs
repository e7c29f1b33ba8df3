//! HTTP/JSON facade over a loaded warehouse.
//!
//! Every body is the serialization of the matching library call with an
//! `apiVersion` member added. Until a warehouse is installed with
//! [`AppState::set_ready`] every endpoint except `/health` answers 503.

use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cim_core::graph::graph_json;
use cim_core::model::Diagnostic;
use cim_core::query::{parse_cql, CqlQuery, QueryError, QueryOptions};
use cim_core::Warehouse;
use serde::Deserialize;
use serde_json::{json, Map, Value as JsonValue};

pub const API_VERSION: u32 = 1;

struct Loaded {
    warehouse: Warehouse,
    model: JsonValue,
    views: JsonValue,
}

#[derive(Default)]
pub struct AppState {
    loaded: OnceLock<Loaded>,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(AppState::default())
    }

    /// Installs the warehouse; later calls are ignored.
    pub fn set_ready(&self, warehouse: Warehouse) {
        let model = graph_json(&warehouse.cdl, &warehouse.sdl, &warehouse.mdl);
        let views = warehouse.views.to_json();
        let _ = self.loaded.set(Loaded {
            warehouse,
            model,
            views,
        });
    }

    pub fn is_ready(&self) -> bool {
        self.loaded.get().is_some()
    }

    fn loaded(&self) -> Result<&Loaded, ApiError> {
        self.loaded.get().ok_or_else(|| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "not_ready",
                "the workspace is still loading",
            )
        })
    }
}

/// An error body: `{apiVersion, code, message, details?}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<JsonValue>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    fn with_status(mut self, status: StatusCode, code: &'static str) -> Self {
        self.status = status;
        self.code = code;
        self
    }

    fn with_details(mut self, details: JsonValue) -> Self {
        self.details = Some(details);
        self
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let message = e.to_string();
        match e {
            QueryError::Syntax { line, column, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "malformed_query", message)
                    .with_details(json!({ "line": line, "column": column }))
            }
            QueryError::Unresolved { kind, name, candidates } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unresolved_name", message)
                    .with_details(json!({ "kind": kind, "name": name, "candidates": candidates }))
            }
            QueryError::Invalid(_) | QueryError::AmbiguousRollup { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", message)
            }
            QueryError::UnmappedLevel(_) | QueryError::UnmappedFactRelationship(_) | QueryError::MissingView(..) => {
                ApiError::new(StatusCode::CONFLICT, "unmapped", message)
            }
            QueryError::Storage(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "apiVersion": API_VERSION, "code": self.code, "message": self.message });
        if let Some(d) = self.details {
            body["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

/// Adds `apiVersion` to an object body, or wraps any other value as `data`.
fn versioned(body: JsonValue) -> Json<JsonValue> {
    let mut map = match body {
        JsonValue::Object(m) => m,
        other => Map::from_iter([("data".to_owned(), other)]),
    };
    map.insert("apiVersion".into(), API_VERSION.into());
    Json(JsonValue::Object(map))
}

type ApiResult = Result<Json<JsonValue>, ApiError>;

async fn health(State(state): State<Arc<AppState>>) -> Json<JsonValue> {
    let ready = state.is_ready();
    versioned(json!({ "status": if ready { "ok" } else { "loading" }, "ready": ready }))
}

async fn model(State(state): State<Arc<AppState>>) -> ApiResult {
    Ok(versioned(state.loaded()?.model.clone()))
}

fn compile_errors(diagnostics: &[Diagnostic]) -> Vec<&Diagnostic> {
    diagnostics.iter().filter(|d| d.is_error()).collect()
}

async fn views(State(state): State<Arc<AppState>>) -> ApiResult {
    let loaded = state.loaded()?;
    let errors = compile_errors(&loaded.warehouse.diagnostics);
    if !errors.is_empty() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "compile_errors",
            format!("compilation reported {} error(s)", errors.len()),
        )
        .with_details(json!({ "diagnostics": errors })));
    }
    Ok(versioned(loaded.views.clone()))
}

async fn level_members(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult {
    state.loaded()?;
    let result = tokio::task::spawn_blocking(move || {
        let loaded = state.loaded()?;
        loaded.warehouse.level_members(&name).map_err(|e| match e {
            QueryError::Unresolved { .. } => ApiError::from(e).with_status(StatusCode::NOT_FOUND, "not_found"),
            e => ApiError::from(e),
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(versioned(result.to_json()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryParams {
    #[serde(default)]
    keep_unmentioned: bool,
}

/// Parses a request body: JSON unless the content type says plain text and
/// the body does not start with `{`.
pub fn parse_body(headers: &HeaderMap, body: &[u8]) -> Result<CqlQuery, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "the body is not UTF-8"))?;
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            "the body is empty",
        ));
    }
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let query = if content_type.starts_with("text/plain") && !trimmed.starts_with('{') {
        parse_cql(trimmed)
    } else {
        CqlQuery::from_json(trimmed)
    };
    query.map_err(ApiError::from)
}

async fn query(
    State(state): State<Arc<AppState>>,
    params: Result<Query<QueryParams>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    state.loaded()?;
    let Query(params) = params.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let q = parse_body(&headers, &body)?;
    let options = QueryOptions {
        keep_unmentioned: params.keep_unmentioned,
    };
    let result =
        tokio::task::spawn_blocking(move || state.loaded()?.warehouse.query(&q, options).map_err(ApiError::from))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(versioned(result.to_json()))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/views", get(views))
        .route("/levels/{name}/members", get(level_members))
        .route("/query", post(query))
        .fallback(not_found)
        .with_state(state)
}
