use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spamlab_client::{Client, TrainRequest};
use spamlab_core::classifiers::ManualTreeSpec;
use spamlab_core::evalkit::compare;
use spamlab_core::textfeat::presets;
use spamlab_core::{Corpus, ModelKind, TextClassifier, TrainedModel};

fn fx(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn spamlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spamlab")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = spamlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    spamlab(args).status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["train", "--model", "logreg"]), 1);
    assert_eq!(code(&["train", "--model", "svm", "--in", &fx("sample10.csv"), "--out", "/dev/null"]), 1);
    assert_eq!(code(&["ingest", "--in", "/definitely/not/here.csv"]), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "subject,label\nhello,maybe\n").unwrap();
    let out = spamlab(&["ingest", "--in", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("maybe"));
}

#[test]
fn ingest_reports_class_balance() {
    assert_eq!(
        stdout(&["ingest", "--in", &fx("sample10.csv")]),
        "10 subjects, 5 spam (50.0%), 5 non-spam\n"
    );
}

#[test]
fn ingest_split_writes_stratified_halves() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    let args = [
        "ingest",
        "--in",
        &fx("sample10.csv"),
        "--split",
        "0.6",
        "--train-out",
        path_str(&train),
        "--test-out",
        path_str(&test),
        "--seed",
        "3",
    ];
    let text = stdout(&args);
    assert!(text.contains("train: 6 subjects, 3 spam"), "{text}");
    assert!(text.contains("test: 4 subjects, 2 spam"), "{text}");
    assert_eq!(stdout(&args), text);

    let original = Corpus::from_csv_str("all", &std::fs::read_to_string(fx("sample10.csv")).unwrap()).unwrap();
    let a = Corpus::from_csv_str("a", &std::fs::read_to_string(&train).unwrap()).unwrap();
    let b = Corpus::from_csv_str("b", &std::fs::read_to_string(&test).unwrap()).unwrap();
    let mut joined: Vec<String> = a.iter().chain(b.iter()).map(|i| i.text.clone()).collect();
    let mut all: Vec<String> = original.iter().map(|i| i.text.clone()).collect();
    joined.sort();
    all.sort();
    assert_eq!(joined, all);
}

#[test]
fn featurize_prints_a_binary_matrix() {
    let text = stdout(&["featurize", "--in", &fx("sample10.csv"), "--features", &fx("two_split_features.json")]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "label,dear_or_bless,contains_re");
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    for row in &rows {
        assert!(row[1..].iter().all(|c| *c == "0" || *c == "1"), "{row:?}");
    }
    assert_eq!(rows.iter().filter(|r| r[1] == "1").count(), 2);
}

#[test]
fn null_rules_score_one_half() {
    let text = stdout(&["rules", "--rules", &fx("null.rules"), "--in", &fx("sample10.csv")]);
    let row = text.lines().nth(1).unwrap();
    let cells: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cells[..4], ["null", "sample10", "0.500", "0.500"]);

    let json: Value =
        serde_json::from_str(&stdout(&["rules", "--rules", &fx("null.rules"), "--in", &fx("sample10.csv"), "--json"]))
            .unwrap();
    assert_eq!(json["metrics"]["accuracy"], 0.5);
    assert_eq!(json["metrics"]["sensitivity"], 0.0);
}

#[test]
fn saved_tree_routes_both_examples() {
    let model = fx("two_split_tree.json");
    assert_eq!(stdout(&["predict", "--model", &model, "--subject", "Dear trusted one"]), "spam score=1.000\n");
    let re = stdout(&["predict", "--model", &model, "--subject", "Re: Classifier software design", "--json"]);
    let re: Value = serde_json::from_str(&re).unwrap();
    assert_eq!(re["label"], "non-spam");
    assert_eq!(re["feature_vector"]["values"], serde_json::json!([false, true]));
}

#[test]
fn evaluate_agrees_with_in_process_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let sample = fx("sample10.csv");
    let corpus = Corpus::from_csv_str("sample10", &std::fs::read_to_string(&sample).unwrap()).unwrap();
    for kind in ["nb", "logreg", "tree", "forest"] {
        let out = dir.path().join(format!("{kind}.json"));
        let msg = stdout(&["train", "--model", kind, "--in", &sample, "--out", path_str(&out), "--seed", "5"]);
        assert!(msg.starts_with("trained "), "{msg}");

        let eval: Value =
            serde_json::from_str(&stdout(&["evaluate", "--model", path_str(&out), "--in", &sample, "--json"])).unwrap();
        let model = TrainedModel::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let table = compare(&[(kind, &model as &dyn TextClassifier)], &corpus, &corpus).unwrap();
        let expected = serde_json::to_value(&table.rows[0].train).unwrap();
        assert_eq!(eval["metrics"], expected, "{kind}");
        assert_eq!(eval["model"], kind);
    }
}

#[test]
fn report_lists_every_model_on_both_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let sample = fx("sample10.csv");
    let null = dir.path().join("null.json");
    let two_split = dir.path().join("two_split.json");
    stdout(&["train", "--model", "manual-tree", "--in", &sample, "--tree", &fx("null_tree_spec.json"), "--out", path_str(&null)]);
    stdout(&[
        "train",
        "--model",
        "manual-tree",
        "--in",
        &sample,
        "--features",
        &fx("two_split_features.json"),
        "--tree",
        &fx("two_split_tree_spec.json"),
        "--out",
        path_str(&two_split),
    ]);
    let models = format!("{},{}", path_str(&null), path_str(&two_split));
    let text = stdout(&["report", "--models", &models, "--train", &sample, "--test", &sample]);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][..3], ["null", "train", "0.500"]);
    assert_eq!(&rows[2][..3], ["two_split", "train", "0.600"]);

    let json: Value = serde_json::from_str(&stdout(&[
        "report", "--models", &models, "--train", &sample, "--test", &sample, "--json",
    ]))
    .unwrap();
    assert_eq!(json["rows"][1]["test"]["tp"], 4);
}

fn start_server() -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            let config = spamlab_service::ServeConfig {
                addr: listener.local_addr().unwrap(),
                data_dir: None,
                ui_dir: None,
            };
            tx.send(format!("http://{}", config.addr)).unwrap();
            spamlab_service::serve_until(listener, &config, std::future::pending()).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

#[test]
fn server_mode_uploads_and_predicts() {
    let url = start_server();
    let text = stdout(&["ingest", "--in", &fx("sample10.csv"), "--server", &url]);
    assert_eq!(text, "corpus 1: 10 subjects, 5 spam (50.0%), 5 non-spam\n");

    let rt = tokio::runtime::Runtime::new().unwrap();
    let model = rt.block_on(async {
        let client = Client::new(&url);
        let fs = client.create_feature_set(&[presets::dear_or_bless(), presets::contains_re()]).await.unwrap();
        let mut request = TrainRequest::new(ModelKind::ManualTree, Some(fs.id), 1);
        let spec = std::fs::read_to_string(fx("two_split_tree_spec.json")).unwrap();
        request.config.tree = Some(ManualTreeSpec::from_json(&spec).unwrap());
        client.train(&request).await.unwrap().id
    });
    let id = model.to_string();
    assert_eq!(
        stdout(&["predict", "--server", &url, "--model", &id, "--subject", "Dear trusted one"]),
        "spam score=1.000\n"
    );

    let missing = spamlab(&["predict", "--server", &url, "--model", "99", "--subject", "x"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("99"));
    assert_eq!(code(&["predict", "--server", &url, "--model", "model.json", "--subject", "x"]), 1);
}

#[test]
fn unreachable_server_is_a_user_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    assert_eq!(code(&["ingest", "--in", &fx("sample10.csv"), "--server", &url]), 1);
}
