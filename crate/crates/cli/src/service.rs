//! The `/v1` HTTP evaluation service.
//!
//! Every route is a pure function of its request body; bodies are parsed
//! with the same field-naming parser as the CLI and answered with the same
//! canonical JSON text, so a route and the matching CLI command produce
//! byte-identical output.

use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use shotdesk_core::api::{self, ErrorBody};
use shotdesk_core::{AnalysisReport, Error, ProjectDoc};

/// Startup configuration, loaded once and never mutated.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    /// Analysis of the project given at startup, if any.
    pub project: Option<Arc<AnalysisReport>>,
}

impl AppState {
    pub fn with_project(doc: &ProjectDoc) -> shotdesk_core::Result<Self> {
        Ok(Self {
            project: Some(Arc::new(shotdesk_core::analyze(doc)?)),
        })
    }
}

fn json_response(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

pub fn error_status(e: &Error) -> StatusCode {
    match e {
        Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => StatusCode::BAD_REQUEST,
        Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn respond<T: Serialize>(result: shotdesk_core::Result<T>) -> Response {
    match result {
        Ok(v) => json_response(StatusCode::OK, api::to_json(&v)),
        Err(e) => json_response(error_status(&e), api::to_json(&ErrorBody::from(&e))),
    }
}

async fn health() -> Response {
    respond(Ok(api::health()))
}

async fn evaluate(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::evaluate(&r)))
}

async fn assess(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::assess_scene(&r)))
}

async fn solve(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::solve(&r)))
}

async fn remap(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::remap(&r)))
}

async fn transition(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::transition(&r)))
}

async fn window(body: String) -> Response {
    respond(api::parse(&body).and_then(|r| api::window(&r)))
}

async fn analyze(body: String) -> Response {
    respond(api::analyze(&body))
}

async fn loaded_analysis(State(state): State<AppState>) -> Response {
    match &state.project {
        Some(report) => respond(Ok(report.as_ref())),
        None => json_response(
            StatusCode::NOT_FOUND,
            api::to_json(&ErrorBody {
                error: "no project was loaded at startup; POST a project document instead".into(),
                field: None,
            }),
        ),
    }
}

async fn not_found() -> Response {
    json_response(
        StatusCode::NOT_FOUND,
        api::to_json(&ErrorBody {
            error: "no such route; see /v1/health".into(),
            field: None,
        }),
    )
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/assess", post(assess))
        .route("/v1/solve", post(solve))
        .route("/v1/remap", post(remap))
        .route("/v1/transition", post(transition))
        .route("/v1/window", post(window))
        .route("/v1/analyze", post(analyze).get(loaded_analysis))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(bind: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("shotdesk listening on http://{}/v1", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
