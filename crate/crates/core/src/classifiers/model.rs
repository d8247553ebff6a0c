use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::forest::{fit_forest, ForestConfig, ForestModel};
use super::logistic::{fit_logistic, LogisticConfig, LogisticModel};
use super::naive_bayes::{fit_naive_bayes, NaiveBayesModel};
use super::tree::{build_manual_tree, induce_tree, DecisionTree, Impurity, ManualTreeSpec, TreeConfig};
use super::{check_threshold, Classifier, ModelError, Prediction, DEFAULT_THRESHOLD};
use crate::corpus::{Corpus, Label};
use crate::error::Error;
use crate::ruledsl::RuleSet;
use crate::textfeat::{FeatureSet, FeatureVector};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "nb")]
    NaiveBayes,
    #[serde(rename = "logreg")]
    Logistic,
    #[serde(rename = "tree")]
    Tree,
    #[serde(rename = "manual_tree")]
    ManualTree,
    #[serde(rename = "forest")]
    Forest,
    #[serde(rename = "ruleset")]
    RuleSet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::NaiveBayes,
        ModelKind::Logistic,
        ModelKind::Tree,
        ModelKind::ManualTree,
        ModelKind::Forest,
        ModelKind::RuleSet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "nb",
            ModelKind::Logistic => "logreg",
            ModelKind::Tree => "tree",
            ModelKind::ManualTree => "manual_tree",
            ModelKind::Forest => "forest",
            ModelKind::RuleSet => "ruleset",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| format!("unknown model kind {s:?}"))
    }
}

/// Hyperparameters for every model kind; each kind reads the fields it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Probability cutoff for naive Bayes and logistic regression.
    pub threshold: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub impurity: Impurity,
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    /// Tree description for `manual_tree`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<ManualTreeSpec>,
    /// Rule file source for `ruleset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let logistic = LogisticConfig::default();
        let tree = TreeConfig::default();
        let forest = ForestConfig::default();
        TrainConfig {
            threshold: DEFAULT_THRESHOLD,
            alpha: 1.0,
            lambda: logistic.lambda,
            max_iter: logistic.max_iter,
            tol: logistic.tol,
            max_depth: tree.max_depth,
            min_leaf: tree.min_leaf,
            impurity: tree.impurity,
            n_trees: forest.n_trees,
            mtry: forest.mtry,
            bootstrap: forest.bootstrap,
            seed: forest.seed,
            tree: None,
            rules: None,
        }
    }
}

impl TrainConfig {
    pub fn logistic(&self) -> LogisticConfig {
        LogisticConfig {
            lambda: self.lambda,
            max_iter: self.max_iter,
            tol: self.tol,
            threshold: self.threshold,
        }
    }

    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            impurity: self.impurity,
        }
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            mtry: self.mtry,
            bootstrap: self.bootstrap,
            seed: self.seed,
            tree: self.tree_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelPayload {
    #[serde(rename = "nb")]
    NaiveBayes(NaiveBayesModel),
    #[serde(rename = "logreg")]
    Logistic(LogisticModel),
    #[serde(rename = "tree")]
    Tree(DecisionTree),
    #[serde(rename = "manual_tree")]
    ManualTree(DecisionTree),
    #[serde(rename = "forest")]
    Forest(ForestModel),
    #[serde(rename = "ruleset")]
    RuleSet(RuleSet),
}

impl ModelPayload {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelPayload::NaiveBayes(_) => ModelKind::NaiveBayes,
            ModelPayload::Logistic(_) => ModelKind::Logistic,
            ModelPayload::Tree(_) => ModelKind::Tree,
            ModelPayload::ManualTree(_) => ModelKind::ManualTree,
            ModelPayload::Forest(_) => ModelKind::Forest,
            ModelPayload::RuleSet(_) => ModelKind::RuleSet,
        }
    }

    fn vector_model(&self) -> Option<&dyn Classifier> {
        match self {
            ModelPayload::NaiveBayes(m) => Some(m),
            ModelPayload::Logistic(m) => Some(m),
            ModelPayload::Tree(m) | ModelPayload::ManualTree(m) => Some(m),
            ModelPayload::Forest(m) => Some(m),
            ModelPayload::RuleSet(_) => None,
        }
    }
}

/// Classifies raw subject lines.
pub trait TextClassifier {
    fn classify(&self, text: &str) -> Result<Prediction, Error>;

    fn classify_corpus(&self, corpus: &Corpus) -> Result<Vec<Label>, Error> {
        corpus
            .iter()
            .map(|item| self.classify(&item.text).map(|p| p.label))
            .collect()
    }
}

/// A trained model bundled with the feature definitions it was trained on,
/// so it can classify raw text on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub features: FeatureSet,
    pub payload: ModelPayload,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u64,
    feature_names: Vec<String>,
    features: FeatureSet,
    #[serde(flatten)]
    payload: ModelPayload,
}

impl TrainedModel {
    pub fn train(kind: ModelKind, config: &TrainConfig, features: &FeatureSet, train: &Corpus) -> Result<TrainedModel, Error> {
        check_threshold(config.threshold)?;
        let matrix = features.featurize(train);
        let payload = match kind {
            ModelKind::NaiveBayes => ModelPayload::NaiveBayes(fit_naive_bayes(&matrix, config.alpha, config.threshold)?),
            ModelKind::Logistic => ModelPayload::Logistic(fit_logistic(&matrix, &config.logistic())?.model),
            ModelKind::Tree => ModelPayload::Tree(induce_tree(&matrix, &config.tree_config())?),
            ModelKind::Forest => ModelPayload::Forest(fit_forest(&matrix, &config.forest())?),
            ModelKind::ManualTree => {
                let spec = config
                    .tree
                    .as_ref()
                    .ok_or(ModelError::MissingInput("manual_tree", "a tree description"))?;
                ModelPayload::ManualTree(build_manual_tree(spec, features, Some(&matrix))?)
            }
            ModelKind::RuleSet => {
                let source = config
                    .rules
                    .as_ref()
                    .ok_or(ModelError::MissingInput("ruleset", "rule source"))?;
                let rules = RuleSet::parse(source)?;
                rules.check(features)?;
                ModelPayload::RuleSet(rules)
            }
        };
        Ok(TrainedModel {
            features: features.clone(),
            payload,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.payload.kind()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.names()
    }

    pub fn vectorize(&self, text: &str) -> FeatureVector {
        self.features.vectorize(text)
    }

    /// Predicts from an already computed feature vector. Rule sets need the
    /// raw text and are rejected here.
    pub fn predict_vector(&self, x: &[bool]) -> Result<Prediction, Error> {
        match self.payload.vector_model() {
            Some(m) => Ok(m.predict(x)?),
            None => Err(ModelError::MissingInput("ruleset", "the subject text").into()),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            format_version: FORMAT_VERSION,
            feature_names: self.features.names(),
            features: self.features.clone(),
            payload: self.payload.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model documents serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, Error> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("model: {e}")))?;
        match value.get("format_version").and_then(Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(other) => return Err(ModelError::UnsupportedFormatVersion(other).into()),
            None => return Err(Error::Format("model: missing format_version".into())),
        }
        let doc: ModelDocument = serde_json::from_value(value).map_err(|e| Error::Format(format!("model: {e}")))?;
        let model = TrainedModel {
            features: doc.features,
            payload: doc.payload,
        };
        if doc.feature_names != model.features.names() {
            return Err(Error::Format("model: feature_names do not match features".into()));
        }
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), Error> {
        let p = self.features.len();
        let bad = |what: String| Err(Error::Format(format!("model: {what}")));
        match &self.payload {
            ModelPayload::RuleSet(rules) => rules.check(&self.features)?,
            ModelPayload::NaiveBayes(m) => {
                let lens = [
                    m.log_p_true.spam.len(),
                    m.log_p_true.non_spam.len(),
                    m.log_p_false.spam.len(),
                    m.log_p_false.non_spam.len(),
                ];
                if lens.iter().any(|&l| l != p) {
                    return bad(format!("naive Bayes tables do not have {p} entries"));
                }
            }
            ModelPayload::Logistic(m) if m.weights.len() != p => {
                return bad(format!("{} weights for {p} features", m.weights.len()));
            }
            ModelPayload::Tree(t) | ModelPayload::ManualTree(t)
                if t.n_features != p || t.root.max_feature_index().is_some_and(|i| i >= p) =>
            {
                return bad("tree refers to features outside the feature set".into());
            }
            ModelPayload::Forest(f)
                if f.n_features != p
                    || f.trees.is_empty()
                    || f.trees.iter().any(|t| t.max_feature_index().is_some_and(|i| i >= p)) =>
            {
                return bad("forest refers to features outside the feature set".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Human-oriented view of the fitted parameters.
    pub fn summary(&self) -> Value {
        let names = self.features.names();
        match &self.payload {
            ModelPayload::NaiveBayes(m) => json!({
                "kind": "nb",
                "alpha": m.alpha,
                "threshold": m.threshold,
                "log_prior": m.log_prior,
                "features": names.iter().enumerate().map(|(j, n)| json!({
                    "feature": n,
                    "log_p_true_spam": m.log_p_true.spam[j],
                    "log_p_true_non_spam": m.log_p_true.non_spam[j],
                    "log_p_false_spam": m.log_p_false.spam[j],
                    "log_p_false_non_spam": m.log_p_false.non_spam[j],
                })).collect::<Vec<_>>(),
            }),
            ModelPayload::Logistic(m) => json!({
                "kind": "logreg",
                "intercept": m.intercept,
                "coefficients": names.iter().zip(&m.weights).map(|(n, w)| json!({"feature": n, "weight": w})).collect::<Vec<_>>(),
                "lambda": m.lambda,
                "threshold": m.threshold,
                "converged": m.converged,
                "iterations": m.iterations,
            }),
            ModelPayload::Tree(t) | ModelPayload::ManualTree(t) => json!({
                "kind": self.kind(),
                "depth": t.root.depth(),
                "tree": t.root.describe(&names),
            }),
            ModelPayload::Forest(f) => {
                let mut root_usage = vec![0usize; names.len()];
                for t in &f.trees {
                    if let Some(j) = t.root_feature() {
                        root_usage[j] += 1;
                    }
                }
                json!({
                    "kind": "forest",
                    "n_trees": f.n_trees,
                    "mtry": f.mtry,
                    "bootstrap": f.bootstrap,
                    "seed": f.seed,
                    "root_split_counts": names.iter().zip(root_usage).map(|(n, c)| json!({"feature": n, "trees": c})).collect::<Vec<_>>(),
                    "first_tree": f.trees.first().map(|t| t.describe(&names)),
                })
            }
            ModelPayload::RuleSet(r) => json!({
                "kind": "ruleset",
                "clauses": r.clauses.iter().map(|c| json!({"condition": c.condition.to_string(), "verdict": c.verdict})).collect::<Vec<_>>(),
                "default": r.default,
            }),
        }
    }
}

impl TextClassifier for TrainedModel {
    fn classify(&self, text: &str) -> Result<Prediction, Error> {
        match &self.payload {
            ModelPayload::RuleSet(rules) => {
                let label = rules.classify(text, &self.features)?;
                Ok(Prediction {
                    label,
                    score: if label.is_spam() { 1.0 } else { 0.0 },
                })
            }
            _ => self.predict_vector(&self.features.values(text)),
        }
    }
}
