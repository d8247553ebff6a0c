use serde_json::{json, Value};

fn op(summary: &str, ok: &str, errors: &[&str]) -> Value {
    let mut responses = serde_json::Map::new();
    responses.insert(ok.into(), json!({"description": "success"}));
    for code in errors {
        responses.insert(
            (*code).into(),
            json!({"description": "error", "content": {"application/json": {"schema": {"$ref": "#/components/schemas/ApiError"}}}}),
        );
    }
    json!({"summary": summary, "responses": responses})
}

fn id_param() -> Value {
    json!([{"name": "id", "in": "path", "required": true, "schema": {"type": "integer", "minimum": 1}}])
}

/// OpenAPI 3.0 description of the HTTP API.
pub fn document() -> Value {
    let with_id = |mut v: Value| {
        v["parameters"] = id_param();
        v
    };
    json!({
        "openapi": "3.0.3",
        "info": {"title": "spamlab", "version": env!("CARGO_PKG_VERSION")},
        "paths": {
            "/healthz": {"get": op("Liveness probe; body is `ok`", "200", &[])},
            "/api-spec": {"get": op("This document", "200", &[])},
            "/corpora": {
                "post": op("Upload a labeled CSV corpus (JSON {csv, name} or text/csv body)", "201", &["400"]),
                "get": op("List corpora", "200", &[]),
            },
            "/corpora/{id}": {
                "get": with_id(op("Corpus summary and items", "200", &["404"])),
                "delete": with_id(op("Delete a corpus not used by any model", "204", &["404", "409"])),
            },
            "/corpora/{id}/vocabulary": {"get": with_id(json!({
                "summary": "Words reaching min_freq (default 4), most frequent first",
                "parameters": [
                    {"name": "min_freq", "in": "query", "schema": {"type": "integer", "minimum": 1}},
                    {"name": "count_mode", "in": "query", "schema": {"type": "string", "enum": ["document", "occurrence"]}},
                ],
                "responses": {"200": {"description": "[{word, count}]"}, "400": {"description": "bad_min_freq"}, "404": {"description": "unknown_corpus"}},
            }))},
            "/feature-sets": {
                "post": op("Create a feature set from a definition list or {features, expand_bag_of_words, min_freq, count_mode}", "201", &["400", "404"]),
                "get": op("List feature sets", "200", &[]),
            },
            "/feature-sets/presets": {"get": op("Built-in feature definitions", "200", &[])},
            "/feature-sets/{id}": {
                "get": with_id(op("Feature set definitions", "200", &["404"])),
                "delete": with_id(op("Delete a feature set not used by any model", "204", &["404", "409"])),
            },
            "/rules/parse": {"post": op("Parse a rule expression ({source}) or rule file ({source, mode: ruleset})", "200", &["400"])},
            "/models": {
                "post": op("Train a model: {kind, feature_set, train_corpus, test_corpus, features, ...hyperparameters}", "201", &["400", "404"]),
                "get": op("List models", "200", &[]),
            },
            "/models/{id}": {
                "get": with_id(op("Model summary, metrics and full model document", "200", &["404"])),
                "delete": with_id(op("Delete a model", "204", &["404"])),
            },
            "/models/{id}/predict": {"post": with_id(op("Classify {subject}", "200", &["400", "404"]))},
            "/models/{id}/metrics": {"get": with_id(op("Train and test metrics", "200", &["404"]))},
            "/models/{id}/predictions": {"get": with_id(op("Per-subject predictions on ?corpus=train|test", "200", &["400", "404"]))},
        },
        "components": {"schemas": {"ApiError": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {
                "code": {"type": "string"},
                "message": {"type": "string"},
                "detail": {"type": "object"},
            },
        }}},
    })
}
