//! Local HTTP service: line submission, decoded state, policy statistics,
//! teacher commands and a throttled stream of executive steps.
//!
//! Routes:
//! - `POST /line` `{"line": "..."}`
//! - `POST /reward` `{"kind": "full" | "partial"}`
//! - `POST /target` `{"kind": "word_group" | "phrase", "words": "..."}`
//! - `GET /state`, `GET /stats`
//! - `GET /events` (server-sent events, at most 30 per second)

use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::{Stream, StreamExt};

use crate::error::Error;
use crate::executive::{MentalAction, SessionMode};
use crate::rewarder::RewardKind;
use crate::session::{Stats, StepEvent, TargetKind};

use super::console::{components, decode, ComponentView, Console, Response};

/// Events kept per subscriber before the oldest are dropped.
pub const EVENT_QUEUE: usize = 256;
pub const MAX_EVENTS_PER_SECOND: u64 = 30;

#[derive(Clone)]
pub struct AppState {
    console: Arc<Mutex<Console>>,
    events: broadcast::Sender<Arc<StepEvent>>,
}

impl AppState {
    /// Wraps `console` and routes its executive steps to the event stream.
    pub fn new(mut console: Console) -> Self {
        let (events, _) = broadcast::channel(EVENT_QUEUE);
        let tx = events.clone();
        console.set_sink(Some(Arc::new(move |e: &StepEvent| {
            let _ = tx.send(Arc::new(e.clone()));
        })));
        AppState {
            console: Arc::new(Mutex::new(console)),
            events,
        }
    }

    pub fn console(&self) -> Arc<Mutex<Console>> {
        self.console.clone()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub error: ErrorBody,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::Protocol(_) => (StatusCode::BAD_REQUEST, "protocol"),
            Error::Parse { .. } => (StatusCode::BAD_REQUEST, "parse"),
            Error::Length { .. } => (StatusCode::BAD_REQUEST, "length"),
            Error::Config(_) => (StatusCode::BAD_REQUEST, "config"),
            Error::PolicyEmpty => (StatusCode::CONFLICT, "policy_empty"),
            Error::Contract(_) => (StatusCode::CONFLICT, "contract"),
            Error::Stack(_) => (StatusCode::CONFLICT, "stack"),
            Error::Capacity { .. } => (StatusCode::INSUFFICIENT_STORAGE, "capacity"),
            Error::Integrity(_) => (StatusCode::UNPROCESSABLE_ENTITY, "integrity"),
            Error::Version { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "version"),
            Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        ApiError {
            status,
            body: ErrorBody {
                kind: kind.into(),
                message: e.to_string(),
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                kind: "malformed_request".into(),
                message: r.body_text(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        (self.status, Json(ErrorPayload { error: self.body })).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct LineRequest {
    pub line: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RewardRequest {
    pub kind: RewardKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TargetRequest {
    pub kind: TargetKind,
    pub words: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateResponse {
    pub mode: SessionMode,
    pub components: Vec<ComponentView>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ActionCount {
    pub action: MentalAction,
    pub neurons: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsResponse {
    pub stats: Stats,
    pub actions: Vec<ActionCount>,
}

/// One streamed executive step.
#[derive(Debug, Serialize, Deserialize)]
pub struct ActivationEvent {
    pub mode: SessionMode,
    pub action: MentalAction,
    pub changed: bool,
    pub attempt: Option<usize>,
    pub layers: Vec<ComponentView>,
}

impl From<&StepEvent> for ActivationEvent {
    fn from(e: &StepEvent) -> Self {
        ActivationEvent {
            mode: e.mode,
            action: e.action,
            changed: e.changed,
            attempt: e.attempt,
            layers: e
                .state
                .components
                .iter()
                .map(|c| ComponentView {
                    name: c.name.clone(),
                    size: c.size,
                    w_max: c.w_max,
                    active: c.active.clone(),
                    decoded: decode(c, &e.buffers),
                })
                .collect(),
        }
    }
}

async fn submit(state: AppState, text: String) -> ApiResult<Response> {
    let console = state.console.clone();
    let result = tokio::task::spawn_blocking(move || console.lock().expect("console lock").submit(&text))
        .await
        .map_err(|e| ApiError::from(Error::Io(e.to_string())))?;
    Ok(Json(result?))
}

async fn post_line(State(state): State<AppState>, body: Result<Json<LineRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = body?;
    if req.line.contains('\n') {
        return Err(Error::Protocol("one line per request".into()).into());
    }
    submit(state, req.line).await
}

async fn post_reward(State(state): State<AppState>, body: Result<Json<RewardRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = body?;
    let line = match req.kind {
        RewardKind::Full => ".reward",
        RewardKind::Partial => ".partial_reward",
    };
    submit(state, line.into()).await
}

async fn post_target(State(state): State<AppState>, body: Result<Json<TargetRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = body?;
    if req.words.contains('\n') {
        return Err(Error::Protocol("one line per request".into()).into());
    }
    let command = match req.kind {
        TargetKind::WordGroup => ".word_group",
        TargetKind::Phrase => ".phrase",
    };
    submit(state, format!("{command} {}", req.words)).await
}

async fn get_state(State(state): State<AppState>) -> ApiResult<StateResponse> {
    let console = state.console.lock().expect("console lock");
    let session = console.session();
    Ok(Json(StateResponse {
        mode: session.mode(),
        components: components(session),
    }))
}

async fn get_stats(State(state): State<AppState>) -> ApiResult<StatsResponse> {
    let console = state.console.lock().expect("console lock");
    let session = console.session();
    Ok(Json(StatsResponse {
        stats: session.stats(),
        actions: session
            .net()
            .action_histogram()
            .into_iter()
            .map(|(action, neurons)| ActionCount { action, neurons })
            .collect(),
    }))
}

/// Lagging subscribers lose their oldest events; the session never waits.
pub fn event_stream(rx: broadcast::Receiver<Arc<StepEvent>>) -> impl Stream<Item = ActivationEvent> {
    BroadcastStream::new(rx)
        .filter_map(|e| e.ok())
        .map(|e| ActivationEvent::from(e.as_ref()))
        .throttle(Duration::from_millis(1000 / MAX_EVENTS_PER_SECOND))
}

async fn get_events(State(state): State<AppState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let stream = event_stream(state.events.subscribe()).map(|e| {
        Ok(Event::default()
            .event("step")
            .json_data(&e)
            .unwrap_or_else(|_| Event::default().comment("unserializable event")))
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/line", post(post_line))
        .route("/reward", post(post_reward))
        .route("/target", post(post_target))
        .route("/state", get(get_state))
        .route("/stats", get(get_stats))
        .route("/events", get(get_events))
        .with_state(state)
}

/// Serves `console` on `addr` until the process ends.
pub async fn serve(console: Console, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(console))).await
}
