//! Core library for classifying email subject lines as spam or non-spam.
//!
//! The crate is organized around the stages of a classification exercise:
//!
//! - [`corpus`]: labeled subject lines, CSV loading and seeded train/test splits.
//! - [`textfeat`]: tokenization and declarative binary features (word lists,
//!   substrings, regexes, casing, punctuation, bag of words).
//! - [`ruledsl`]: hand-written Boolean rules and ordered rule sets.
//! - [`classifiers`]: naive Bayes, penalized logistic regression, decision
//!   trees (induced or built by hand) and random forests.
//! - [`evalkit`]: confusion matrices, exact-rational metrics and comparison
//!   tables.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod ruledsl;
pub mod textfeat;

pub use classifiers::{ModelKind, Prediction, TextClassifier, TrainConfig, TrainedModel};
pub use corpus::{Corpus, Label, LabeledSubject, SplitSpec};
pub use error::Error;
pub use evalkit::{ComparisonTable, ConfusionMatrix, MetricsReport};
pub use ruledsl::{RuleExpr, RuleSet};
pub use textfeat::{FeatureDef, FeatureKind, FeatureMatrix, FeatureSet, FeatureVector, Vocabulary};
