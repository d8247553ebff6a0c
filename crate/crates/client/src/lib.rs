//! Async client for the spamlab HTTP API.

use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spamlab_core::textfeat::VocabEntry;
use spamlab_core::{FeatureDef, FeatureVector, Label, ModelKind, TrainConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{status} {code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
        detail: Option<Value>,
    },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// The service's machine-readable error code, if this is an API error.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CorpusSummary {
    pub id: u64,
    pub name: String,
    pub size: usize,
    pub spam: usize,
    pub non_spam: usize,
    pub class_balance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FeatureSetInfo {
    pub id: u64,
    pub feature_names: Vec<String>,
    pub features: Vec<FeatureDef>,
}

/// Body of `POST /models`.
#[derive(Debug, Clone, Serialize)]
pub struct TrainRequest {
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_set: Option<u64>,
    pub train_corpus: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_corpus: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
    #[serde(flatten)]
    pub config: TrainConfig,
}

impl TrainRequest {
    pub fn new(kind: ModelKind, feature_set: Option<u64>, train_corpus: u64) -> Self {
        TrainRequest {
            kind,
            feature_set,
            train_corpus,
            test_corpus: None,
            features: None,
            config: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModelInfo {
    pub id: u64,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub train_metrics: Value,
    pub test_metrics: Value,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PredictResponse {
    pub label: Label,
    pub score: f64,
    pub feature_vector: FeatureVector,
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    /// `base_url` is e.g. `http://127.0.0.1:8080`.
    pub fn new(base_url: &str) -> Self {
        Client {
            http: reqwest::Client::new(),
            base: base_url.trim_end_matches('/').to_string(),
        }
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send(&self, req: RequestBuilder) -> Result<reqwest::Response> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let body: Value = resp.json().await.unwrap_or(Value::Null);
        Err(ClientError::Api {
            status: status.as_u16(),
            code: body["code"].as_str().unwrap_or("unknown").to_string(),
            message: body["message"].as_str().unwrap_or_default().to_string(),
            detail: body.get("detail").cloned(),
        })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = self.send(req).await?;
        let bytes = resp.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn delete(&self, path: &str) -> Result<()> {
        let resp = self.send(self.request(Method::DELETE, path)).await?;
        match resp.status() {
            StatusCode::NO_CONTENT | StatusCode::OK => Ok(()),
            other => Err(ClientError::Decode(format!("unexpected status {other}"))),
        }
    }

    pub async fn health(&self) -> Result<String> {
        Ok(self.send(self.request(Method::GET, "/healthz")).await?.text().await?)
    }

    pub async fn api_spec(&self) -> Result<Value> {
        self.json(self.request(Method::GET, "/api-spec")).await
    }

    pub async fn upload_corpus(&self, csv: &str, name: Option<&str>) -> Result<CorpusSummary> {
        let body = json!({"csv": csv, "name": name});
        self.json(self.request(Method::POST, "/corpora").json(&body)).await
    }

    pub async fn corpus(&self, id: u64) -> Result<Value> {
        self.json(self.request(Method::GET, &format!("/corpora/{id}"))).await
    }

    pub async fn delete_corpus(&self, id: u64) -> Result<()> {
        self.delete(&format!("/corpora/{id}")).await
    }

    pub async fn vocabulary(&self, id: u64, min_freq: usize) -> Result<Vec<VocabEntry>> {
        let path = format!("/corpora/{id}/vocabulary?min_freq={min_freq}");
        self.json(self.request(Method::GET, &path)).await
    }

    pub async fn create_feature_set(&self, defs: &[FeatureDef]) -> Result<FeatureSetInfo> {
        self.json(self.request(Method::POST, "/feature-sets").json(defs)).await
    }

    /// Feature set of `defs` plus one bag-of-words feature per word that
    /// reaches `min_freq` in the given corpus.
    pub async fn create_bag_of_words(&self, defs: &[FeatureDef], corpus: u64, min_freq: usize) -> Result<FeatureSetInfo> {
        let body = json!({"features": defs, "expand_bag_of_words": corpus, "min_freq": min_freq});
        self.json(self.request(Method::POST, "/feature-sets").json(&body)).await
    }

    pub async fn feature_set(&self, id: u64) -> Result<FeatureSetInfo> {
        self.json(self.request(Method::GET, &format!("/feature-sets/{id}"))).await
    }

    pub async fn delete_feature_set(&self, id: u64) -> Result<()> {
        self.delete(&format!("/feature-sets/{id}")).await
    }

    pub async fn presets(&self) -> Result<Value> {
        self.json(self.request(Method::GET, "/feature-sets/presets")).await
    }

    pub async fn parse_rule(&self, source: &str) -> Result<Value> {
        let body = json!({"source": source});
        self.json(self.request(Method::POST, "/rules/parse").json(&body)).await
    }

    pub async fn parse_ruleset(&self, source: &str) -> Result<Value> {
        let body = json!({"source": source, "mode": "ruleset"});
        self.json(self.request(Method::POST, "/rules/parse").json(&body)).await
    }

    pub async fn train(&self, request: &TrainRequest) -> Result<ModelInfo> {
        self.json(self.request(Method::POST, "/models").json(request)).await
    }

    pub async fn model(&self, id: u64) -> Result<Value> {
        self.json(self.request(Method::GET, &format!("/models/{id}"))).await
    }

    pub async fn delete_model(&self, id: u64) -> Result<()> {
        self.delete(&format!("/models/{id}")).await
    }

    pub async fn predict(&self, id: u64, subject: &str) -> Result<PredictResponse> {
        let body = json!({"subject": subject});
        self.json(self.request(Method::POST, &format!("/models/{id}/predict")).json(&body))
            .await
    }

    pub async fn metrics(&self, id: u64) -> Result<Value> {
        self.json(self.request(Method::GET, &format!("/models/{id}/metrics"))).await
    }

    /// Per-subject predictions on the model's `train` or `test` corpus.
    pub async fn predictions(&self, id: u64, corpus: &str) -> Result<Value> {
        let path = format!("/models/{id}/predictions?corpus={corpus}");
        self.json(self.request(Method::GET, &path)).await
    }
}
