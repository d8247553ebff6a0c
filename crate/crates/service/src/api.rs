use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spamlab_core::evalkit::MetricsReport;
use spamlab_core::ruledsl::parse_rule;
use spamlab_core::textfeat::{presets, CountMode, Vocabulary, DEFAULT_MIN_FREQ};
use spamlab_core::{Corpus, FeatureDef, FeatureSet, ModelKind, RuleSet, TextClassifier, TrainConfig, TrainedModel};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::openapi;
use crate::store::{Store, StoredModel};

const BODY_LIMIT: usize = 32 * 1024 * 1024;

/// Shared handle to the session store. Writers serialize; readers run
/// concurrently. The lock is never held across an await point.
#[derive(Clone, Default)]
pub struct AppState {
    store: Arc<RwLock<Store>>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        AppState {
            store: Arc::new(RwLock::new(store)),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|e| e.into_inner())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    router_with_ui(state, None)
}

/// The API routes, plus static files from `ui_dir` for any other path.
pub fn router_with_ui(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api-spec", get(|| async { Json(openapi::document()) }))
        .route("/corpora", post(create_corpus).get(list_corpora))
        .route("/corpora/{id}", get(get_corpus).delete(delete_corpus))
        .route("/corpora/{id}/vocabulary", get(vocabulary))
        .route("/feature-sets", post(create_feature_set).get(list_feature_sets))
        .route("/feature-sets/presets", get(feature_presets))
        .route("/feature-sets/{id}", get(get_feature_set).delete(delete_feature_set))
        .route("/rules/parse", post(parse_rules))
        .route("/models", post(create_model).get(list_models))
        .route("/models/{id}", get(get_model).delete(delete_model))
        .route("/models/{id}/predict", post(predict))
        .route("/models/{id}/metrics", get(model_metrics))
        .route("/models/{id}/predictions", get(model_predictions))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") }),
    }
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("bad_request", format!("invalid request body: {e}")))
}

fn parse_id(raw: &str, code: &'static str) -> ApiResult<u64> {
    raw.parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, code, format!("{raw:?} is not a valid id")))
}

fn created<T: Serialize>(body: T) -> impl IntoResponse {
    (StatusCode::CREATED, Json(body))
}

// ---- corpora ----

#[derive(Debug, Serialize)]
struct CorpusSummary {
    id: u64,
    name: String,
    size: usize,
    spam: usize,
    non_spam: usize,
    class_balance: f64,
}

fn summarize(id: u64, corpus: &Corpus) -> CorpusSummary {
    let spam = corpus.count(spamlab_core::Label::Spam);
    CorpusSummary {
        id,
        name: corpus.name().to_string(),
        size: corpus.len(),
        spam,
        non_spam: corpus.len() - spam,
        class_balance: spam as f64 / corpus.len() as f64,
    }
}

#[derive(Deserialize)]
struct CorpusUpload {
    csv: String,
    name: Option<String>,
}

async fn create_corpus(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let (csv, name) = if is_json {
        let upload: CorpusUpload = parse_json(&body)?;
        (upload.csv, upload.name)
    } else {
        let text = String::from_utf8(body.to_vec())
            .map_err(|_| ApiError::bad_request("bad_request", "corpus body is not UTF-8"))?;
        (text, None)
    };
    let name = name.or_else(|| query.get("name").cloned()).unwrap_or_else(|| "upload".into());
    let corpus = Corpus::from_csv_str(name, &csv)?;
    let mut store = state.write();
    let id = store.add_corpus(corpus);
    let corpus = store.corpus(id)?;
    Ok(created(summarize(id, &corpus)))
}

async fn list_corpora(State(state): State<AppState>) -> Json<Vec<CorpusSummary>> {
    Json(state.read().corpora().map(|(id, c)| summarize(id, c)).collect())
}

async fn get_corpus(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_corpus")?;
    let corpus = state.read().corpus(id)?;
    let mut body = serde_json::to_value(summarize(id, &corpus)).expect("summary serializes");
    body["items"] = corpus
        .iter()
        .map(|item| json!({"subject": item.text, "label": item.label}))
        .collect();
    Ok(Json(body))
}

async fn delete_corpus(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = parse_id(&id, "unknown_corpus")?;
    state.write().remove_corpus(id)?;
    Ok(StatusCode::NO_CONTENT)
}

fn parse_min_freq(raw: Option<&String>) -> ApiResult<usize> {
    match raw {
        None => Ok(DEFAULT_MIN_FREQ),
        Some(s) => match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(ApiError::bad_request("bad_min_freq", format!("min_freq {s:?} must be a positive integer"))),
        },
    }
}

fn parse_count_mode(raw: Option<&str>) -> ApiResult<CountMode> {
    match raw {
        None | Some("document") => Ok(CountMode::Document),
        Some("occurrence") => Ok(CountMode::Occurrence),
        Some(other) => Err(ApiError::bad_request(
            "bad_count_mode",
            format!("count_mode {other:?} must be document or occurrence"),
        )),
    }
}

async fn vocabulary(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_corpus")?;
    let corpus = state.read().corpus(id)?;
    let min_freq = parse_min_freq(query.get("min_freq"))?;
    let mode = parse_count_mode(query.get("count_mode").map(String::as_str))?;
    let vocab = Vocabulary::build(&corpus, min_freq, mode)?;
    Ok(Json(serde_json::to_value(vocab.entries).expect("entries serialize")))
}

// ---- feature sets ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureSetRequest {
    #[serde(default)]
    features: Vec<FeatureDef>,
    expand_bag_of_words: Option<u64>,
    min_freq: Option<usize>,
    count_mode: Option<String>,
}

fn feature_set_view(id: u64, features: &FeatureSet) -> Value {
    json!({
        "id": id,
        "feature_names": features.names(),
        "features": features,
    })
}

async fn create_feature_set(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let value: Value = parse_json(&body)?;
    let request = if value.is_array() {
        FeatureSetRequest {
            features: serde_json::from_value(value).map_err(|e| ApiError::bad_request("bad_format", e.to_string()))?,
            expand_bag_of_words: None,
            min_freq: None,
            count_mode: None,
        }
    } else {
        serde_json::from_value(value).map_err(|e| ApiError::bad_request("bad_format", e.to_string()))?
    };
    let mut features = FeatureSet::new(request.features)?;
    if let Some(corpus_id) = request.expand_bag_of_words {
        let corpus = state.read().corpus(corpus_id)?;
        let min_freq = request.min_freq.unwrap_or(DEFAULT_MIN_FREQ);
        if min_freq == 0 {
            return Err(ApiError::bad_request("bad_min_freq", "min_freq must be a positive integer"));
        }
        let mode = parse_count_mode(request.count_mode.as_deref())?;
        features = features.with_bag_of_words(&Vocabulary::build(&corpus, min_freq, mode)?);
    }
    let id = state.write().add_feature_set(features.clone());
    Ok(created(feature_set_view(id, &features)))
}

async fn list_feature_sets(State(state): State<AppState>) -> Json<Vec<Value>> {
    Json(
        state
            .read()
            .feature_sets()
            .map(|(id, f)| json!({"id": id, "feature_names": f.names()}))
            .collect(),
    )
}

async fn feature_presets() -> Json<Value> {
    Json(json!({
        "shiny": presets::shiny(),
        "standard": presets::standard(),
    }))
}

async fn get_feature_set(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_feature_set")?;
    let features = state.read().feature_set(id)?;
    Ok(Json(feature_set_view(id, &features)))
}

async fn delete_feature_set(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = parse_id(&id, "unknown_feature_set")?;
    state.write().remove_feature_set(id)?;
    Ok(StatusCode::NO_CONTENT)
}

// ---- rules ----

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ParseMode {
    Expr,
    Ruleset,
}

#[derive(Deserialize)]
struct ParseRequest {
    source: String,
    mode: Option<ParseMode>,
    /// When given, feature names in the rules are checked against this set.
    feature_set: Option<u64>,
}

async fn parse_rules(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let request: ParseRequest = parse_json(&body)?;
    let features = request.feature_set.map(|id| state.read().feature_set(id)).transpose()?;
    match request.mode.unwrap_or(ParseMode::Expr) {
        ParseMode::Expr => {
            let ast = parse_rule(&request.source)?;
            if let Some(f) = &features {
                ast.check(f)?;
            }
            Ok(Json(json!({"ast": ast, "pretty": ast.to_string()})))
        }
        ParseMode::Ruleset => {
            let rules = RuleSet::parse(&request.source)?;
            if let Some(f) = &features {
                rules.check(f)?;
            }
            Ok(Json(json!({"ruleset": rules, "pretty": rules.to_string()})))
        }
    }
}

// ---- models ----

#[derive(Deserialize)]
struct ModelRequest {
    kind: ModelKind,
    feature_set: Option<u64>,
    train_corpus: u64,
    test_corpus: Option<u64>,
    /// Subset of the feature set to train on, by name.
    features: Option<Vec<String>>,
    #[serde(flatten)]
    config: TrainConfig,
}

fn model_view(id: u64, m: &StoredModel) -> Value {
    json!({
        "id": id,
        "kind": m.model.kind(),
        "feature_set": m.feature_set,
        "train_corpus": m.train_corpus,
        "test_corpus": m.test_corpus,
        "feature_names": m.model.feature_names(),
        "train_metrics": m.train_metrics,
        "test_metrics": m.test_metrics,
        "payload": m.model.summary(),
    })
}

async fn create_model(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: ModelRequest = parse_json(&body)?;
    let (features, train, test) = {
        let store = state.read();
        let features = match request.feature_set {
            Some(id) => store.feature_set(id)?,
            None => Arc::new(FeatureSet::default()),
        };
        let train = store.corpus(request.train_corpus)?;
        let test = request.test_corpus.map(|id| store.corpus(id)).transpose()?;
        (features, train, test)
    };
    let features = match &request.features {
        Some(names) => features.select(names)?,
        None => (*features).clone(),
    };
    let stored = tokio::task::spawn_blocking(move || -> ApiResult<StoredModel> {
        let model = TrainedModel::train(request.kind, &request.config, &features, &train)?;
        StoredModel::evaluate(
            model,
            request.feature_set,
            (request.train_corpus, &train),
            request.test_corpus.zip(test.as_deref()),
        )
    })
    .await
    .map_err(|_| ApiError::internal())??;
    let mut store = state.write();
    let id = store.add_model(stored)?;
    let model = store.model(id)?;
    Ok(created(model_view(id, &model)))
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<Value>> {
    Json(
        state
            .read()
            .models()
            .map(|(id, m)| {
                json!({
                    "id": id,
                    "kind": m.model.kind(),
                    "train_accuracy": m.train_metrics.accuracy.to_string(),
                })
            })
            .collect(),
    )
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_model")?;
    let m = state.read().model(id)?;
    let mut view = model_view(id, &m);
    view["model"] = serde_json::from_str(&m.model.to_json()).expect("model JSON is valid");
    Ok(Json(view))
}

async fn delete_model(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = parse_id(&id, "unknown_model")?;
    state.write().remove_model(id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct PredictRequest {
    subject: String,
}

async fn predict(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_model")?;
    let m = state.read().model(id)?;
    let request: PredictRequest = parse_json(&body)?;
    if request.subject.trim().is_empty() {
        return Err(ApiError::bad_request("empty_subject", "subject must not be empty"));
    }
    let prediction = m.model.classify(&request.subject)?;
    Ok(Json(json!({
        "label": prediction.label,
        "score": prediction.score,
        "feature_vector": m.model.vectorize(&request.subject),
    })))
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    id: u64,
    model: String,
    train: &'a MetricsReport,
    test: Option<&'a MetricsReport>,
}

async fn model_metrics(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_model")?;
    let m = state.read().model(id)?;
    let row = MetricsRow {
        id,
        model: format!("{}-{id}", m.model.kind().as_str()),
        train: &m.train_metrics,
        test: m.test_metrics.as_ref(),
    };
    Ok(Json(serde_json::to_value(row).expect("metrics serialize")))
}

async fn model_predictions(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "unknown_model")?;
    let (m, corpus) = {
        let store = state.read();
        let m = store.model(id)?;
        let corpus_id = match query.get("corpus").map(String::as_str) {
            None | Some("train") => m.train_corpus,
            Some("test") => m
                .test_corpus
                .ok_or_else(|| ApiError::bad_request("no_test_corpus", "model was trained without a test corpus"))?,
            Some(other) => {
                return Err(ApiError::bad_request(
                    "bad_corpus_selector",
                    format!("corpus {other:?} must be train or test"),
                ));
            }
        };
        (m.clone(), store.corpus(corpus_id)?)
    };
    let mut rows = Vec::with_capacity(corpus.len());
    for item in corpus.iter() {
        let p = m.model.classify(&item.text)?;
        rows.push(json!({
            "subject": item.text,
            "label": item.label,
            "predicted": p.label,
            "score": p.score,
        }));
    }
    Ok(Json(Value::Array(rows)))
}
