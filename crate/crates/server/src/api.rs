//! HTTP routes. All bodies are JSON except the CSV upload (multipart) and the
//! export download.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use tabiic_core::insight::DualityResult;
use tabiic_core::owl::local_name;
use tabiic_core::session::{DualityQuery, Warning};
use tabiic_core::views::{DatasetSummary, NodeDetail, TreeView};
use tabiic_core::{export_owl, export_session, Action, LoadOptions, NodeId, Session};

use crate::error::ApiError;
use crate::parse_delimiter;
use crate::store::{NewSession, SessionSlot, Store};

/// Uploads up to this size are accepted.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

pub fn router(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/tree", get(tree))
        .route("/sessions/{id}/nodes/{nid}", get(node_detail))
        .route("/sessions/{id}/nodes/{nid}/duality", post(duality))
        .route("/sessions/{id}/actions", post(action))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/export", get(export))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") }),
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request("invalid_body", e.body_text()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> Result<T, ApiError> {
    p.map(|Path(v)| v).map_err(|e| ApiError::bad_request("invalid_path", e.body_text()))
}

/// Runs CPU-bound session work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub dataset: DatasetSummary,
    pub selection: Vec<String>,
    pub seed: u64,
    pub tree: TreeView,
}

impl SessionInfo {
    fn of(slot: &SessionSlot, session: &Session) -> Self {
        let ds = session.dataset();
        let default = tabiic_core::select_attributes(ds, None).map(|s| s.names().to_vec()).unwrap_or_default();
        Self {
            session_id: slot.id().to_string(),
            dataset: DatasetSummary::new(ds, session.file_name(), &default),
            selection: session.selection().names().to_vec(),
            seed: session.seed(),
            tree: session.taxonomy().into(),
        }
    }
}

fn text_field(name: &str, bytes: &[u8]) -> Result<String, ApiError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| ApiError::bad_request("invalid_field", format!("{name} is not UTF-8")))
}

/// Selection as a JSON array or a comma-separated list.
fn parse_selection(text: &str) -> Result<Option<Vec<String>>, ApiError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    if text.starts_with('[') {
        return serde_json::from_str(text)
            .map(Some)
            .map_err(|e| ApiError::bad_request("invalid_field", format!("selection: {e}")));
    }
    Ok(Some(text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()))
}

async fn create_session(State(store): State<Arc<Store>>, mut form: Multipart) -> Result<Response, ApiError> {
    let mut file = None;
    let mut options = LoadOptions::default();
    let mut selection = None;
    let mut seed = None;
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request("invalid_upload", e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field.bytes().await.map_err(|e| ApiError::bad_request("invalid_upload", e.body_text()))?;
        match name.as_str() {
            "file" => file = Some((file_name.unwrap_or_else(|| "upload.csv".into()), bytes.to_vec())),
            "delimiter" => {
                let text = text_field(&name, &bytes)?;
                options.delimiter = parse_delimiter(&text).map_err(|e| ApiError::bad_request("invalid_field", e))?;
            }
            "missing_markers" => options = options.with_missing_markers(&text_field(&name, &bytes)?),
            "selection" => selection = parse_selection(&text_field(&name, &bytes)?)?,
            "seed" => {
                let text = text_field(&name, &bytes)?;
                seed = Some(text.trim().parse().map_err(|_| ApiError::bad_request("invalid_field", format!("seed {text:?}")))?);
            }
            other => return Err(ApiError::bad_request("invalid_field", format!("unexpected field {other:?}"))),
        }
    }
    let (file_name, bytes) = file.ok_or_else(|| ApiError::bad_request("missing_file", "the upload has no \"file\" field"))?;
    let new = NewSession { bytes, file_name, options, selection, seed };
    let info = blocking(move || {
        let (slot, _) = store.create(new)?;
        Ok(SessionInfo::of(&slot, &slot.snapshot()))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn session_info(
    State(store): State<Arc<Store>>,
    id: Result<Path<String>, PathRejection>,
) -> Result<Json<SessionInfo>, ApiError> {
    let slot = store.get(&path(id)?)?;
    Ok(Json(SessionInfo::of(&slot, &slot.snapshot())))
}

async fn tree(State(store): State<Arc<Store>>, id: Result<Path<String>, PathRejection>) -> Result<Json<TreeView>, ApiError> {
    let session = store.get(&path(id)?)?.snapshot();
    Ok(Json(session.taxonomy().into()))
}

async fn node_detail(
    State(store): State<Arc<Store>>,
    ids: Result<Path<(String, NodeId)>, PathRejection>,
) -> Result<Json<NodeDetail>, ApiError> {
    let (id, nid) = path(ids)?;
    let session = store.get(&id)?.snapshot();
    let detail = blocking(move || NodeDetail::build(&session, nid).map_err(ApiError::from)).await?;
    Ok(Json(detail))
}

#[derive(Debug, Deserialize)]
pub struct DualityRequest {
    pub attribute: String,
    #[serde(flatten)]
    pub query: DualityQuery,
}

async fn duality(
    State(store): State<Arc<Store>>,
    ids: Result<Path<(String, NodeId)>, PathRejection>,
    payload: Result<Json<DualityRequest>, JsonRejection>,
) -> Result<Json<DualityResult>, ApiError> {
    let (id, nid) = path(ids)?;
    let req = body(payload)?;
    let session = store.get(&id)?.snapshot();
    Ok(Json(session.duality(nid, &req.attribute, &req.query)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ActionResponse {
    pub tree: TreeView,
    pub warning: Option<Warning>,
    pub created: Vec<NodeId>,
}

async fn action(
    State(store): State<Arc<Store>>,
    id: Result<Path<String>, PathRejection>,
    payload: Result<Json<Action>, JsonRejection>,
) -> Result<Json<ActionResponse>, ApiError> {
    let slot = store.get(&path(id)?)?;
    let action = body(payload)?;
    let (outcome, session) = blocking(move || slot.mutate(|s| s.apply(action).map_err(ApiError::from))).await?;
    Ok(Json(ActionResponse { tree: session.taxonomy().into(), warning: outcome.warning, created: outcome.created }))
}

async fn undo(State(store): State<Arc<Store>>, id: Result<Path<String>, PathRejection>) -> Result<Json<TreeView>, ApiError> {
    let slot = store.get(&path(id)?)?;
    let ((), session) = blocking(move || slot.mutate(|s| s.undo().map_err(ApiError::from))).await?;
    Ok(Json(session.taxonomy().into()))
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
    pub iri: Option<String>,
}

/// File-name stem of the dataset, used for download names and default IRIs.
fn stem(file_name: &str) -> String {
    let base = file_name.rsplit(['/', '\\']).next().unwrap_or(file_name);
    let stem = base.rsplit_once('.').map_or(base, |(s, _)| s);
    let name = local_name(stem);
    if name.is_empty() {
        "taxonomy".into()
    } else {
        name
    }
}

pub fn default_iri(file_name: &str) -> String {
    format!("http://example.org/tabiic/{}", stem(file_name))
}

async fn export(
    State(store): State<Arc<Store>>,
    id: Result<Path<String>, PathRejection>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let session = store.get(&path(id)?)?.snapshot();
    let stem = stem(session.file_name());
    let (text, content_type, file) = match q.format.as_deref().unwrap_or("owl") {
        "owl" | "ofn" => {
            let iri = q.iri.unwrap_or_else(|| default_iri(session.file_name()));
            (export_owl(session.taxonomy(), session.dataset(), &iri)?, "text/owl-functional; charset=utf-8", format!("{stem}.ofn"))
        }
        "session" => (export_session(&session), "application/json", format!("{stem}.tabiic.json")),
        other => return Err(ApiError::bad_request("unknown_format", format!("unknown export format {other:?}; use owl or session"))),
    };
    Ok((
        [(header::CONTENT_TYPE, content_type.to_string()), (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{file}\""))],
        text,
    )
        .into_response())
}
