use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use maplot_core::export::ExportError;
use maplot_core::filter::FilterError;
use maplot_core::ingest::IngestError;
use maplot_core::ma::MaError;
use maplot_core::selection::SelectionError;
use maplot_core::session::SessionError;

/// Every code the service can put in an error body.
pub const ERROR_CODES: &[&str] = &[
    // ingest
    "SchemaError",
    "DuplicateGeneName",
    "MalformedRow",
    "NonPositiveIntensity",
    "PValueOutOfRange",
    "TooManyRows",
    // significance
    "AlphaOutOfRange",
    // selection and filters
    "DegeneratePolygon",
    "InvalidBox",
    "MixedDatasets",
    "EmptyCombine",
    "UnknownGene",
    "InvalidFilter",
    // session
    "UnknownSelection",
    "NotesTooLarge",
    "UnknownDataset",
    "UnknownSession",
    "InvalidEventLog",
    // export
    "UnsupportedVersion",
    "CorruptBundle",
    "InvalidViewport",
    // transport
    "BadRequest",
    "PayloadTooLarge",
    "NotFound",
    "MethodNotAllowed",
];

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        debug_assert!(ERROR_CODES.contains(&code), "unregistered error code {code}");
        ApiError {
            status: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn status_for(code: &str) -> StatusCode {
    match code {
        "UnknownDataset" | "UnknownSession" | "UnknownSelection" | "NotFound" => StatusCode::NOT_FOUND,
        "UnknownGene" => StatusCode::NOT_FOUND,
        "PayloadTooLarge" | "NotesTooLarge" | "TooManyRows" => StatusCode::PAYLOAD_TOO_LARGE,
        "MethodNotAllowed" => StatusCode::METHOD_NOT_ALLOWED,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn engine(code: &str, message: String) -> ApiError {
    ApiError::new(status_for(code), code, message)
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let err = engine(e.code(), e.to_string());
        match &e {
            IngestError::SchemaError { missing, found } => {
                err.with_detail(json!({ "missing": missing, "found": found }))
            }
            IngestError::DuplicateGeneName { name, line, first_line } => {
                err.with_detail(json!({ "line": line, "name": name, "first_line": first_line }))
            }
            IngestError::NonPositiveIntensity { line, column, value } => {
                err.with_detail(json!({ "line": line, "column": column, "value": value }))
            }
            IngestError::TooManyRows { limit } => err.with_detail(json!({ "limit": limit })),
            _ => match e.line() {
                Some(line) => err.with_detail(json!({ "line": line })),
                None => err,
            },
        }
    }
}

impl From<MaError> for ApiError {
    fn from(e: MaError) -> Self {
        engine(e.code(), e.to_string())
    }
}

impl From<SelectionError> for ApiError {
    fn from(e: SelectionError) -> Self {
        engine(e.code(), e.to_string())
    }
}

impl From<FilterError> for ApiError {
    fn from(e: FilterError) -> Self {
        engine(e.code(), e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let err = engine(e.code(), e.to_string());
        match &e {
            SessionError::UnknownSelection { id } => err.with_detail(json!({ "selection_id": id })),
            SessionError::InvalidEventLog { index, .. } => err.with_detail(json!({ "event": index })),
            _ => err,
        }
    }
}

impl From<ExportError> for ApiError {
    fn from(e: ExportError) -> Self {
        let err = engine(e.code(), e.to_string());
        match &e {
            ExportError::CorruptBundle { path, .. } => err.with_detail(json!({ "path": path })),
            _ => err,
        }
    }
}
