use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors surfaced by the service. Each maps to one HTTP status and a
/// stable machine-readable `code`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("trial `{0}` not found")]
    NotFound(String),

    #[error("{message}")]
    InvalidConfig { message: String, field: Option<String> },

    #[error("{message}")]
    BadRequest { message: String, field: Option<String> },

    #[error("{0}")]
    Conflict(String),

    #[error("{0}")]
    Gone(String),

    #[error("missing or invalid access token")]
    Unauthorized,

    #[error("storage: {0}")]
    Storage(String),

    #[error("corrupt event log: {0}")]
    Replay(String),
}

/// JSON error body: `{code, message, field?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ServiceError {
    pub fn bad_request(message: impl Into<String>, field: Option<&str>) -> Self {
        ServiceError::BadRequest {
            message: message.into(),
            field: field.map(str::to_string),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidConfig { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Gone(_) => StatusCode::GONE,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Storage(_) | ServiceError::Replay(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::InvalidConfig { .. } => "invalid_config",
            ServiceError::BadRequest { .. } => "bad_request",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Gone(_) => "gone",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Storage(_) => "storage_error",
            ServiceError::Replay(_) => "replay_error",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let field = match self {
            ServiceError::InvalidConfig { field, .. } | ServiceError::BadRequest { field, .. } => field.clone(),
            _ => None,
        };
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
            field,
        }
    }
}

impl From<wedesign::Error> for ServiceError {
    fn from(e: wedesign::Error) -> Self {
        ServiceError::InvalidConfig {
            field: e.field().map(str::to_string),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
