//! Statistical classifiers over binary feature matrices.
//!
//! Every model answers the same question through [`Classifier::predict`]:
//! given a feature vector, return a [`Label`] and a spam score in `[0, 1]`.
//! Ties are always resolved toward [`Label::NonSpam`].

mod forest;
mod logistic;
mod model;
mod naive_bayes;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::textfeat::FeatureMatrix;

pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use logistic::{fit_logistic, nll_gradient, penalized_nll, sigmoid, LogisticConfig, LogisticFit, LogisticModel};
pub use model::{ModelKind, ModelPayload, TextClassifier, TrainConfig, TrainedModel, FORMAT_VERSION};
pub use naive_bayes::{fit_naive_bayes, NaiveBayesModel, PerClass};
pub use tree::{
    build_manual_tree, induce_tree, ClassCounts, DecisionTree, Impurity, ManualTreeSpec, TreeConfig, TreeNode,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("training data contains only one class")]
    SingleClassCorpus,
    #[error("model needs at least one feature")]
    ZeroFeatures,
    #[error("training data is empty")]
    EmptyMatrix,
    #[error("feature vector has {found} values, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value during fitting: {0}")]
    NonFinite(String),
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("unsupported model format_version {0}")]
    UnsupportedFormatVersion(u64),
    #[error("model kind {0} needs {1}")]
    MissingInput(&'static str, &'static str),
}

/// Output of every model: a label and a spam score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

/// Shared predict contract over binary feature vectors.
pub trait Classifier {
    fn n_features(&self) -> usize;

    fn predict(&self, x: &[bool]) -> Result<Prediction, ModelError>;

    fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<Prediction>, ModelError> {
        matrix.rows.iter().map(|r| self.predict(r)).collect()
    }
}

fn check_dimension(expected: usize, x: &[bool]) -> Result<(), ModelError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}

fn check_both_classes(matrix: &FeatureMatrix) -> Result<(), ModelError> {
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    if matrix.count(Label::Spam) == 0 || matrix.count(Label::NonSpam) == 0 {
        return Err(ModelError::SingleClassCorpus);
    }
    Ok(())
}

pub(crate) fn check_threshold(threshold: f64) -> Result<(), ModelError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(ModelError::BadHyperparameter(format!(
            "threshold {threshold} must lie strictly between 0 and 1"
        )))
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Spam iff the score is strictly above the threshold.
pub fn label_for(score: f64, threshold: f64) -> Label {
    if score > threshold { Label::Spam } else { Label::NonSpam }
}
