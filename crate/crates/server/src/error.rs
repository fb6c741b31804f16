use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use sachs_core::helpgen::AnalyticsError;
use sachs_core::{AssessError, GraphError, VariantRequestError};

/// Error body `{error, detail}` with an HTTP status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: String,
    pub detail: String,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        Self {
            status,
            error: error.to_string(),
            detail: detail.into(),
        }
    }

    pub fn bad_request(error: &str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error, detail)
    }

    pub fn not_found(error: &str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, error, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.error, "detail": self.detail}))).into_response()
    }
}

impl From<AssessError> for ApiError {
    fn from(e: AssessError) -> Self {
        use sachs_core::interpretation::InterpretationError;
        let code = match &e {
            AssessError::UnknownRule(_) => return Self::not_found("unknown_rule", e.to_string()),
            AssessError::Interpretation(InterpretationError::UnknownBlock(_)) => {
                return Self::not_found("unknown_block", e.to_string())
            }
            AssessError::Unresolved(_) => return Self::not_found("uninterpreted_cell", e.to_string()),
            AssessError::UnknownProfile(_) => return Self::not_found("unknown_profile", e.to_string()),
            AssessError::Interpretation(_) => "missing_value",
            AssessError::RuleType(_) => "rule_type",
            AssessError::RuleNotForBlock { .. } => "rule_not_for_block",
            AssessError::BlockTooSmall(_) => "block_too_small",
            AssessError::EmptyDomain(_) => "empty_domain",
        };
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownConcept(_) => Self::not_found("unknown_concept", e.to_string()),
            GraphError::UnknownNode(_) => Self::not_found("unknown_node", e.to_string()),
            GraphError::Format(_) => Self::bad_request("bad_graph", e.to_string()),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "analytics", e.to_string())
    }
}

impl From<VariantRequestError> for ApiError {
    fn from(e: VariantRequestError) -> Self {
        match e {
            VariantRequestError::Interpretation(sachs_core::interpretation::InterpretationError::UnknownBlock(_)) => {
                Self::not_found("unknown_block", e.to_string())
            }
            VariantRequestError::UnknownFrame(_) | VariantRequestError::UnknownVariant { .. } => {
                Self::not_found("unknown_variant", e.to_string())
            }
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "variant", e.to_string()),
        }
    }
}
