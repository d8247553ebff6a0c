use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};
use spamlab_core::classifiers::ModelError;
use spamlab_core::corpus::CorpusError;
use spamlab_core::evalkit::EvalError;
use spamlab_core::ruledsl::{RuleError, RuleSetError};
use spamlab_core::textfeat::FeatureError;
use spamlab_core::Error;

/// Error body returned by every endpoint: a stable machine-readable `code`,
/// a human message and optional location details.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, id: u64) -> Self {
        let what = code.trim_start_matches("unknown_").replace('_', " ");
        ApiError::new(StatusCode::NOT_FOUND, code, format!("no {what} with id {id}"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "in_use", message)
    }

    pub fn internal() -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error")
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

fn corpus_code(e: &CorpusError) -> (&'static str, Option<Value>) {
    match e {
        CorpusError::MissingColumn(column) => ("missing_column", Some(json!({ "column": column }))),
        CorpusError::BadLabel { row, .. } => ("bad_label", Some(json!({ "row": row }))),
        CorpusError::EmptySubject { row } => ("empty_subject", Some(json!({ "row": row }))),
        CorpusError::EmptyCorpus => ("empty_corpus", None),
        CorpusError::Malformed { row, .. } => ("malformed_csv", Some(json!({ "row": row }))),
        CorpusError::InvalidFraction(_) => ("invalid_fraction", None),
        CorpusError::Io(_) => ("io_error", None),
    }
}

fn feature_code(e: &FeatureError) -> &'static str {
    match e {
        FeatureError::BadName(_) => "bad_feature_name",
        FeatureError::DuplicateFeatureName(_) => "duplicate_feature_name",
        FeatureError::EmptyWordList(_) => "empty_word_list",
        FeatureError::EmptyBagWord(_) => "empty_bag_word",
        FeatureError::BadMinCount(_) => "bad_min_count",
        FeatureError::BadRegex { .. } => "bad_regex",
        FeatureError::UnknownFeature(_) => "unknown_feature",
        FeatureError::BadMinFreq => "bad_min_freq",
    }
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::SingleClassCorpus => "single_class_corpus",
        ModelError::ZeroFeatures => "zero_features",
        ModelError::EmptyMatrix => "empty_matrix",
        ModelError::DimensionMismatch { .. } => "dimension_mismatch",
        ModelError::NonFinite(_) => "internal",
        ModelError::BadHyperparameter(_) => "bad_hyperparameter",
        ModelError::UnknownFeature(_) => "unknown_feature",
        ModelError::MalformedTree(_) => "malformed_tree",
        ModelError::UnsupportedFormatVersion(_) => "unsupported_format_version",
        ModelError::MissingInput(..) => "missing_input",
    }
}

fn eval_code(e: &EvalError) -> &'static str {
    match e {
        EvalError::LengthMismatch { .. } => "length_mismatch",
        EvalError::EmptyInput => "empty_input",
        EvalError::EmptyMatrix => "empty_matrix",
        EvalError::DuplicateModelName(_) => "duplicate_model_name",
        EvalError::NoModels => "no_models",
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            tracing::error!("internal error: {e}");
            return ApiError::internal();
        }
        let message = e.to_string();
        let (code, detail) = match &e {
            Error::Corpus(c) => corpus_code(c),
            Error::Feature(f) => (feature_code(f), None),
            Error::Rule(RuleError::Syntax { position, .. }) => ("syntax_error", Some(json!({ "position": position }))),
            Error::Rule(RuleError::UnknownFeature { name }) => ("unknown_feature", Some(json!({ "feature": name }))),
            Error::RuleSet(r) => match r {
                RuleSetError::Syntax { line, column, .. } => {
                    ("syntax_error", Some(json!({ "line": line, "column": column })))
                }
                RuleSetError::MissingArrow { line } => ("missing_arrow", Some(json!({ "line": line }))),
                RuleSetError::BadVerdict { line, .. } => ("bad_verdict", Some(json!({ "line": line }))),
                RuleSetError::ClauseAfterDefault { line } => ("clause_after_default", Some(json!({ "line": line }))),
                RuleSetError::MissingDefault => ("missing_default", None),
            },
            Error::Model(m) => (model_code(m), None),
            Error::Eval(v) => (eval_code(v), None),
            Error::Format(_) => ("bad_format", None),
        };
        let err = ApiError::bad_request(code, message);
        match detail {
            Some(d) => err.with_detail(d),
            None => err,
        }
    }
}

macro_rules! from_module_error {
    ($($t:ty),*) => {
        $(impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        })*
    };
}

from_module_error!(CorpusError, FeatureError, RuleError, RuleSetError, ModelError, EvalError);
