use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use tabiic_core::dataset::{LoadError, SelectionError};
use tabiic_core::document::ImportError;
use tabiic_core::owl::OwlError;
use tabiic_core::session::{QueryError, SessionError};
use tabiic_core::taxonomy::EngineError;

/// Error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into() }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    /// Status for an engine-level code: missing things are 404, actions that
    /// do not fit the current tree are 409, everything else is a bad request.
    fn from_code(code: &'static str, message: String) -> Self {
        let status = match code {
            "unknown_node" | "unknown_session" => StatusCode::NOT_FOUND,
            "not_a_leaf" | "extension_too_small" | "degenerate_extension" | "root_not_definable"
            | "contradicts_ancestor" | "root_not_deletable" | "complement_not_deletable" | "nothing_to_undo"
            | "empty_node" | "empty_selection" => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

macro_rules! from_coded {
    ($($ty:ty),*) => {$(
        impl From<$ty> for ApiError {
            fn from(e: $ty) -> Self {
                Self::from_code(e.code(), e.to_string())
            }
        }
    )*};
}

from_coded!(LoadError, SelectionError, EngineError, SessionError, QueryError, ImportError, OwlError);
