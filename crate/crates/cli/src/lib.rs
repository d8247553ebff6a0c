//! The `spamlab` command line. File-based commands run in-process; `serve`
//! starts the HTTP service and `--server` sends work to a running one.

use std::fmt;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use spamlab_client::Client;
use spamlab_core::classifiers::{Impurity, ManualTreeSpec};
use spamlab_core::evalkit::{compare, score};
use spamlab_core::textfeat::{presets, CountMode, Vocabulary, DEFAULT_MIN_FREQ};
use spamlab_core::{Corpus, FeatureSet, Label, ModelKind, RuleSet, SplitSpec, TextClassifier, TrainConfig, TrainedModel};

#[derive(Debug, Parser)]
#[command(name = "spamlab", version, about = "Classify email subject lines as spam or non-spam")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus CSV and print its class balance
    Ingest(IngestArgs),
    /// Print the binary feature matrix of a corpus as CSV
    Featurize(FeaturizeArgs),
    /// Apply a rule file to a corpus and print its metrics
    Rules(RulesArgs),
    /// Train a model and write it as JSON
    Train(TrainArgs),
    /// Score a saved model on a labeled corpus
    Evaluate(EvaluateArgs),
    /// Classify one subject line
    Predict(PredictArgs),
    /// Compare several saved models on a train and a test corpus
    Report(ReportArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus CSV with `subject` and `label` columns
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Upload the corpus to a running service instead
    #[arg(long, value_name = "URL")]
    pub server: Option<String>,
    /// Fraction of each class that goes to the training split
    #[arg(long, value_name = "FRACTION", requires_all = ["train_out", "test_out"])]
    pub split: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub train_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub test_out: Option<PathBuf>,
    /// Split without keeping class proportions
    #[arg(long)]
    pub unstratified: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// JSON list of feature definitions (built-in features if omitted)
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    /// Add one feature per word reaching --min-freq in the input corpus
    #[arg(long)]
    pub bag_of_words: bool,
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ, value_name = "K")]
    pub min_freq: usize,
    /// Count total occurrences instead of lines containing the word
    #[arg(long)]
    pub count_occurrences: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Include the subject text as the first column
    #[arg(long)]
    pub subjects: bool,
}

#[derive(Debug, Args)]
pub struct RulesArgs {
    #[arg(long, value_name = "FILE")]
    pub rules: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Feature definitions the rules may refer to (built-in features if omitted)
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// nb, logreg, tree, forest, manual-tree or ruleset
    #[arg(long, value_name = "KIND")]
    pub model: ModelKind,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tree description for manual-tree
    #[arg(long, value_name = "FILE")]
    pub tree: Option<PathBuf>,
    /// Rule file for ruleset
    #[arg(long = "rules", value_name = "FILE")]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Laplace smoothing for nb
    #[arg(long)]
    pub alpha: Option<f64>,
    /// L2 penalty for logreg
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Split criterion for tree and forest: gini or entropy
    #[arg(long)]
    pub impurity: Option<String>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file, or a model id with --server
    #[arg(long, value_name = "FILE|ID")]
    pub model: String,
    #[arg(long)]
    pub subject: String,
    #[arg(long, value_name = "URL")]
    pub server: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Comma-separated model files
    #[arg(long, value_name = "M1,M2,...", value_delimiter = ',', required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Directory for the store snapshot
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Static web UI files to serve
    #[arg(long, value_name = "DIR")]
    pub ui: Option<PathBuf>,
}

/// A failed command: bad input (exit 1) or a broken internal invariant (exit 2).
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => f.write_str(m),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<spamlab_core::Error> for CliError {
    fn from(e: spamlab_core::Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::User(e.to_string())
        }
    }
}

impl From<spamlab_client::ClientError> for CliError {
    fn from(e: spamlab_client::ClientError) -> Self {
        match &e {
            spamlab_client::ClientError::Api { status, .. } if *status >= 500 => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

fn core_err<E: Into<spamlab_core::Error>>(e: E) -> CliError {
    CliError::from(e.into())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::User(e.to_string())
}

type CliResult = Result<(), CliError>;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = read_text(path)?;
    Corpus::from_csv_str(stem(path), &text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn load_features(path: Option<&Path>) -> Result<FeatureSet, CliError> {
    match path {
        Some(p) => FeatureSet::from_json(&read_text(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display()))),
        None => Ok(presets::standard()),
    }
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    TrainedModel::from_json(&read_text(path)?).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn resolve_features(args: &FeatureArgs, corpus: &Corpus) -> Result<FeatureSet, CliError> {
    let base = if args.bag_of_words && args.features.is_none() {
        FeatureSet::default()
    } else {
        load_features(args.features.as_deref())?
    };
    if !args.bag_of_words {
        return Ok(base);
    }
    let mode = if args.count_occurrences { CountMode::Occurrence } else { CountMode::Document };
    let vocab = Vocabulary::build(corpus, args.min_freq, mode).map_err(core_err)?;
    Ok(base.with_bag_of_words(&vocab))
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn percent(part: usize, total: usize) -> String {
    // One decimal, computed on integers to avoid float rounding surprises.
    let tenths = (part as u128 * 2000 + total as u128) / (2 * total as u128);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

fn balance_line(corpus: &Corpus) -> String {
    let spam = corpus.count(Label::Spam);
    format!(
        "{} subjects, {} spam ({}), {} non-spam",
        corpus.len(),
        spam,
        percent(spam, corpus.len()),
        corpus.len() - spam
    )
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::Featurize(a) => featurize(a, out),
        Command::Rules(a) => rules(a, out),
        Command::Train(a) => train(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Report(a) => report(a, out),
        Command::Serve(a) => serve(a),
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&a.input)?;
    if let Some(url) = &a.server {
        let csv = read_text(&a.input)?;
        let summary = runtime()?.block_on(Client::new(url).upload_corpus(&csv, Some(corpus.name())))?;
        writeln!(out, "corpus {}: {}", summary.id, balance_line(&corpus)).map_err(io_err)?;
        return Ok(());
    }
    writeln!(out, "{}", balance_line(&corpus)).map_err(io_err)?;
    if let (Some(fraction), Some(train_out), Some(test_out)) = (a.split, &a.train_out, &a.test_out) {
        let spec = SplitSpec {
            train_fraction: fraction,
            seed: a.seed,
            stratified: !a.unstratified,
        };
        let (train, test) = corpus.split(&spec).map_err(core_err)?;
        std::fs::write(train_out, train.to_csv_string()).map_err(io_err)?;
        std::fs::write(test_out, test.to_csv_string()).map_err(io_err)?;
        writeln!(out, "train: {}", balance_line(&train)).map_err(io_err)?;
        writeln!(out, "test: {}", balance_line(&test)).map_err(io_err)?;
    }
    Ok(())
}

fn featurize(a: FeaturizeArgs, out: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&a.input)?;
    let features = resolve_features(&a.features, &corpus)?;
    let matrix = features.featurize(&corpus);
    let subjects: Vec<String> = corpus.iter().map(|i| i.text.clone()).collect();
    out.write_all(matrix.to_csv(a.subjects.then_some(&subjects[..])).as_bytes())
        .map_err(io_err)
}

fn rules(a: RulesArgs, out: &mut dyn Write) -> CliResult {
    let source = read_text(&a.rules)?;
    let rules = RuleSet::parse(&source).map_err(|e| CliError::User(format!("{}: {e}", a.rules.display())))?;
    let features = load_features(a.features.as_deref())?;
    let corpus = load_corpus(&a.input)?;
    let predicted = rules.apply(&corpus, &features).map_err(core_err)?;
    let report = score(&predicted, &corpus.labels()).map_err(core_err)?;
    let name = stem(&a.rules);
    if a.json {
        let doc = json!({"model": name, "data": corpus.name(), "metrics": report});
        writeln!(out, "{doc}").map_err(io_err)
    } else {
        write!(out, "{}", report.to_table(&name, corpus.name())).map_err(io_err)
    }
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig, CliError> {
    let mut c = TrainConfig {
        seed: a.seed,
        ..TrainConfig::default()
    };
    if let Some(v) = a.threshold {
        c.threshold = v;
    }
    if let Some(v) = a.alpha {
        c.alpha = v;
    }
    if let Some(v) = a.lambda {
        c.lambda = v;
    }
    if let Some(v) = a.max_iter {
        c.max_iter = v;
    }
    if let Some(v) = a.max_depth {
        c.max_depth = v;
    }
    if let Some(v) = a.min_leaf {
        c.min_leaf = v;
    }
    if let Some(v) = &a.impurity {
        c.impurity = match v.as_str() {
            "gini" => Impurity::Gini,
            "entropy" => Impurity::Entropy,
            other => return Err(CliError::User(format!("unknown impurity {other:?} (gini or entropy)"))),
        };
    }
    if let Some(v) = a.n_trees {
        c.n_trees = v;
    }
    c.mtry = a.mtry;
    c.bootstrap = !a.no_bootstrap;
    if let Some(p) = &a.tree {
        let spec = ManualTreeSpec::from_json(&read_text(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
        c.tree = Some(spec);
    }
    if let Some(p) = &a.rules {
        c.rules = Some(read_text(p)?);
    }
    Ok(c)
}

fn train(a: TrainArgs, out: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&a.input)?;
    let features = resolve_features(&a.features, &corpus)?;
    let config = train_config(&a)?;
    let model = TrainedModel::train(a.model, &config, &features, &corpus)?;
    let report = score(&model.classify_corpus(&corpus)?, &corpus.labels()).map_err(core_err)?;
    std::fs::write(&a.out, model.to_json()).map_err(|e| CliError::User(format!("{}: {e}", a.out.display())))?;
    writeln!(
        out,
        "trained {} on {} subjects with {} features; training accuracy {}; wrote {}",
        model.kind(),
        corpus.len(),
        features.len(),
        spamlab_core::evalkit::decimal3(report.accuracy),
        a.out.display()
    )
    .map_err(io_err)
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let model = load_model(&a.model)?;
    let corpus = load_corpus(&a.input)?;
    let report = score(&model.classify_corpus(&corpus)?, &corpus.labels()).map_err(core_err)?;
    let name = stem(&a.model);
    if a.json {
        let doc = json!({"model": name, "kind": model.kind(), "data": corpus.name(), "metrics": report});
        writeln!(out, "{doc}").map_err(io_err)
    } else {
        write!(out, "{}", report.to_table(&name, corpus.name())).map_err(io_err)
    }
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> CliResult {
    let (label, score, vector) = match &a.server {
        Some(url) => {
            let id: u64 = a
                .model
                .parse()
                .map_err(|_| CliError::User(format!("--model must be a model id with --server, got {:?}", a.model)))?;
            let p = runtime()?.block_on(Client::new(url).predict(id, &a.subject))?;
            (p.label, p.score, p.feature_vector)
        }
        None => {
            let model = load_model(Path::new(&a.model))?;
            let p = model.classify(&a.subject)?;
            (p.label, p.score, model.vectorize(&a.subject))
        }
    };
    if a.json {
        let doc = json!({"label": label, "score": score, "feature_vector": vector});
        writeln!(out, "{doc}").map_err(io_err)
    } else {
        writeln!(out, "{label} score={score:.3}").map_err(io_err)
    }
}

fn report(a: ReportArgs, out: &mut dyn Write) -> CliResult {
    let models: Vec<(String, TrainedModel)> = a
        .models
        .iter()
        .map(|p| Ok((stem(p), load_model(p)?)))
        .collect::<Result<_, CliError>>()?;
    let train = load_corpus(&a.train)?;
    let test = load_corpus(&a.test)?;
    let named: Vec<(&str, &dyn TextClassifier)> = models
        .iter()
        .map(|(n, m)| (n.as_str(), m as &dyn TextClassifier))
        .collect();
    let table = compare(&named, &train, &test)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string(&table).expect("tables serialize")).map_err(io_err)
    } else {
        write!(out, "{}", table.to_text()).map_err(io_err)
    }
}

fn serve(a: ServeArgs) -> CliResult {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let config = spamlab_service::ServeConfig {
        addr: SocketAddr::new(a.host, a.port),
        data_dir: a.data,
        ui_dir: a.ui,
    };
    runtime()?
        .block_on(spamlab_service::serve(config))
        .map_err(|e| CliError::User(format!("serve: {e}")))
}
