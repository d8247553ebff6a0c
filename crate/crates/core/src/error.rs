use thiserror::Error;

use crate::classifiers::ModelError;
use crate::corpus::CorpusError;
use crate::evalkit::EvalError;
use crate::ruledsl::{RuleError, RuleSetError};
use crate::textfeat::FeatureError;

/// Any error raised by this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    RuleSet(#[from] RuleSetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// A document (JSON model, feature list) that does not have the expected shape.
    #[error("bad format: {0}")]
    Format(String),
}

impl Error {
    /// True for violated internal invariants, as opposed to bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Model(ModelError::NonFinite(_)))
    }
}
