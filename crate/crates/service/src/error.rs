use std::io;

use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

/// Startup and configuration errors.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("service configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] metaphor_core::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An error returned to HTTP clients as `{code, message, detail}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    detail: &'a Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_input", message)
    }

    pub fn no_verb(text: &str) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_verb", "no verb found in the input")
            .with_detail(json!({ "text": text }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<metaphor_core::Error> for ApiError {
    fn from(e: metaphor_core::Error) -> Self {
        use metaphor_core::Error as E;
        let message = e.to_string();
        match e {
            E::InvalidInput(_) => ApiError::invalid(message),
            E::InvalidConfig(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", message),
            E::Parse { line, .. } => ApiError::invalid(message).with_detail(json!({ "line": line })),
            E::Adapter { slot, .. } => ApiError::new(StatusCode::BAD_GATEWAY, "adapter_failure", message)
                .with_detail(json!({ "slot": slot })),
            E::GenerationFailed(_) => ApiError::new(StatusCode::BAD_GATEWAY, "generation_failed", message),
            E::Backend(_) => ApiError::new(StatusCode::BAD_GATEWAY, "backend_failure", message),
            E::Io(_) => ApiError::internal(message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}
