//! HTTP routes. Every body is JSON with snake_case fields; errors are
//! `{code, message, field?}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wedesign::TrialConfig;

use crate::error::{ServiceError, ServiceResult};
use crate::session::{AssignmentResponse, RecommendationResponse, SessionView};
use crate::store::{now_millis, Store};

/// Header carrying an idempotency key when the body does not.
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// When set, every request must carry `Authorization: Bearer <token>`.
    pub token: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateTrial {
    pub config: TrialConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AssignmentRequest {
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRequest {
    pub arm: usize,
    pub outcome: usize,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WhatIfQuery {
    pub arm: usize,
    pub outcome: usize,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/trials", post(create_trial))
        .route("/api/trials/{id}", get(get_trial))
        .route("/api/trials/{id}/assignments", post(next_assignment))
        .route("/api/trials/{id}/outcomes", post(record_outcome))
        .route("/api/trials/{id}/whatif", get(whatif))
        .route("/api/trials/{id}/recommendation", get(recommendation))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(expected.as_str()) {
            return ServiceError::Unauthorized.into_response();
        }
    }
    next.run(request).await
}

/// Parses a JSON body, naming the offending field on failure.
fn parse_body<T: DeserializeOwned>(bytes: &[u8], empty_ok: bool) -> ServiceResult<T> {
    let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) && empty_ok { b"{}" } else { bytes };
    let de = &mut serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        ServiceError::BadRequest { message: e.inner().to_string(), field }
    })
}

fn header_key(headers: &HeaderMap) -> Option<String> {
    headers
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

async fn create_trial(State(state): State<AppState>, body: Bytes) -> ServiceResult<(StatusCode, Json<SessionView>)> {
    let request: CreateTrial = parse_body(&body, false).map_err(|e| match e {
        ServiceError::BadRequest { message, field } => ServiceError::InvalidConfig { message, field },
        other => other,
    })?;
    let view = state.store.create(request.config)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_trial(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Json<SessionView>> {
    Ok(Json(state.store.view(&id)?))
}

async fn next_assignment(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ServiceResult<Json<AssignmentResponse>> {
    let request: AssignmentRequest = parse_body(&body, true)?;
    let key = request.idempotency_key.or_else(|| header_key(&headers));
    let response = state.store.mutate(&id, |s| s.assign(key, now_millis())).await?;
    Ok(Json(response))
}

async fn record_outcome(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ServiceResult<Json<SessionView>> {
    let request: OutcomeRequest = parse_body(&body, false)?;
    let key = request.idempotency_key.or_else(|| header_key(&headers));
    let view = state
        .store
        .mutate(&id, |s| s.record_outcome(request.arm, request.outcome, key, now_millis()))
        .await?;
    Ok(Json(view))
}

async fn whatif(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<WhatIfQuery>, QueryRejection>,
) -> ServiceResult<Json<SessionView>> {
    let Query(q) = query.map_err(|e| ServiceError::bad_request(e.body_text(), None))?;
    Ok(Json(state.store.read(&id, |s| s.whatif(q.arm, q.outcome))?))
}

async fn recommendation(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<Json<RecommendationResponse>> {
    let response = state.store.mutate(&id, |s| s.recommend(now_millis())).await?;
    Ok(Json(response))
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
