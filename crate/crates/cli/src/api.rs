// SPDX-License-Identifier: MIT OR Apache-2.0

//! REST adapter over [`vexad_core::session`]. Handlers only translate
//! between JSON and session calls; all behavior lives in the core crate.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use vexad_core::eval::{auc, EvalRecord};
use vexad_core::scorer::Scorer;
use vexad_core::session::{Answer, Corpus, Phase, Session, SessionConfig};
use vexad_core::Error;

use crate::projection::pca2;
use crate::store::{Shared, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    WrongPhase,
    Validation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            status: status.as_u16(),
        }
    }

    fn not_found(what: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            ErrorCode::NotFound,
            format!("{what} not found"),
        )
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::WrongPhase { .. } => Self::new(StatusCode::CONFLICT, ErrorCode::WrongPhase, msg),
            Error::Validation(_) => Self::new(StatusCode::CONFLICT, ErrorCode::Validation, msg),
            Error::Io(_) | Error::Json(_) | Error::NonFinite(_) => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                ErrorCode::BadRequest,
                msg,
            ),
            _ => Self::new(StatusCode::BAD_REQUEST, ErrorCode::BadRequest, msg),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(
            StatusCode::BAD_REQUEST,
            ErrorCode::BadRequest,
            e.body_text(),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    pub corpus: Corpus,
    pub store: Store,
    /// Glyph coordinates by sample id, only for datasets without pixels.
    pub projection: Option<Vec<[f64; 2]>>,
}

impl AppState {
    pub fn new(corpus: Corpus, store: Store) -> Self {
        let projection = (!corpus.dataset.has_pixels()).then(|| pca2(&corpus.features));
        Self {
            corpus,
            store,
            projection,
        }
    }

    fn item(&self, id: usize) -> DisplayItem {
        let s = &self.corpus.dataset.samples[id];
        DisplayItem {
            id,
            features: s.features.clone(),
            pixels_a: s.pixels_before.as_ref().map(|p| p.as_slice().to_vec()),
            pixels_b: s.pixels_after.as_ref().map(|p| p.as_slice().to_vec()),
            projection: self.projection.as_ref().map(|p| p[id]),
        }
    }

    fn display(&self, session: &Session) -> Vec<DisplayItem> {
        session
            .current_display()
            .map(|ids| ids.iter().map(|&id| self.item(id)).collect())
            .unwrap_or_default()
    }

    fn lookup(&self, id: &str) -> ApiResult<Shared> {
        self.store
            .get(id)
            .ok_or_else(|| ApiError::not_found("session"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayItem {
    pub id: usize,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels_a: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels_b: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub t: usize,
    pub budget: usize,
    pub phase: Phase,
    pub display: Vec<DisplayItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplayView {
    pub t: usize,
    pub phase: Phase,
    pub finished: bool,
    pub display: Vec<DisplayItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsRequest {
    pub labels: Vec<Answer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsResponse {
    pub t: usize,
    pub phase: Phase,
    pub finished: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<Vec<DisplayItem>>,
    pub metrics: Vec<EvalRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<EvalRecord>,
    pub auc: Option<f64>,
}

/// Everything in `session.json` except the generator state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub config: SessionConfig,
    pub t: usize,
    pub phase: Phase,
    pub displays: Vec<Vec<usize>>,
    pub labels: Vec<Vec<i64>>,
    pub scorer: Option<Scorer>,
    pub metrics: Vec<EvalRecord>,
}

fn report_of(session: &Session) -> Report {
    let records = session.metrics().to_vec();
    let auc = auc(&records).ok();
    Report { records, auc }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::BadRequest,
            e.to_string(),
        )
    })?
}

async fn create(
    State(app): State<Arc<AppState>>,
    body: Result<Json<SessionConfig>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let Json(mut cfg) = body?;
    cfg.dataset = Some(app.corpus.dataset.name.clone());
    cfg.split_seed = app.corpus.split_seed;
    let created = blocking(move || {
        let session = Session::start(cfg, &app.corpus)?;
        let display = app.display(&session);
        let (t, budget, phase) = (session.t(), session.config().budget, session.phase());
        let session_id = app.store.insert(session)?;
        Ok(Created {
            session_id,
            t,
            budget,
            phase,
            display,
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn state(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<StateView>> {
    let shared = app.lookup(&id)?;
    let file = shared.lock().expect("session lock poisoned").to_state();
    Ok(Json(StateView {
        session_id: id,
        config: file.config,
        t: file.t,
        phase: file.phase,
        displays: file.displays,
        labels: file.labels,
        scorer: file.scorer,
        metrics: file.metrics,
    }))
}

async fn display(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<DisplayView>> {
    let shared = app.lookup(&id)?;
    let session = shared.lock().expect("session lock poisoned");
    Ok(Json(DisplayView {
        t: session.t(),
        phase: session.phase(),
        finished: session.phase() == Phase::Finished,
        display: app.display(&session),
    }))
}

async fn labels(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<LabelsRequest>, JsonRejection>,
) -> ApiResult<Json<LabelsResponse>> {
    let Json(req) = body?;
    let shared = app.lookup(&id)?;
    let out = blocking(move || {
        let mut session = shared.lock().expect("session lock poisoned");
        session.submit_labels(&app.corpus, &req.labels)?;
        if session.phase() == Phase::Ready {
            session.advance(&app.corpus)?;
        }
        app.store.persist(&id, &session)?;
        let finished = session.phase() == Phase::Finished;
        Ok(LabelsResponse {
            t: session.t(),
            phase: session.phase(),
            finished,
            display: (!finished).then(|| app.display(&session)),
            metrics: session.metrics().to_vec(),
        })
    })
    .await?;
    Ok(Json(out))
}

async fn report(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Report>> {
    let shared = app.lookup(&id)?;
    let session = shared.lock().expect("session lock poisoned");
    Ok(Json(report_of(&session)))
}

async fn healthz() -> &'static str {
    "ok"
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("route")
}

/// The full service: REST API, health check, and optional static assets.
pub fn router(app: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(state))
        .route("/sessions/{id}/display", get(display))
        .route("/sessions/{id}/labels", post(labels))
        .route("/sessions/{id}/report", get(report))
        .fallback(api_not_found);
    let base = Router::new()
        .route("/healthz", get(healthz))
        .nest("/api", api)
        .with_state(app);
    match assets {
        Some(dir) => base.fallback_service(ServeDir::new(dir)),
        None => base.fallback(api_not_found),
    }
}
