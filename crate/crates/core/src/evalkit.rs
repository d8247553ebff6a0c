//! Scoring predictions against ground truth.
//!
//! Spam is the positive class. Metrics are exact fractions; a metric whose
//! denominator is zero is [`Metric::Undefined`] rather than 0 or NaN.

use std::fmt::{self, Write as _};

use num_rational::Ratio;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::classifiers::TextClassifier;
use crate::corpus::{Corpus, Label};
use crate::error::Error;
use crate::textfeat::Feature;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{predicted} predictions for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("nothing to score")]
    EmptyInput,
    #[error("confusion matrix has no counts")]
    EmptyMatrix,
    #[error("duplicate model name {0:?}")]
    DuplicateModelName(String),
    #[error("no models to compare")]
    NoModels,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix {
            true_pos: tp,
            false_neg: fn_,
            false_pos: fp,
            true_neg: tn,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Spam, Label::Spam) => self.true_pos += 1,
            (Label::NonSpam, Label::Spam) => self.false_neg += 1,
            (Label::Spam, Label::NonSpam) => self.false_pos += 1,
            (Label::NonSpam, Label::NonSpam) => self.true_neg += 1,
        }
    }

    /// The same counts with non-spam treated as the positive class.
    pub fn swap_classes(&self) -> ConfusionMatrix {
        ConfusionMatrix::new(self.true_neg, self.false_pos, self.false_neg, self.true_pos)
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        cm.record(p, t);
    }
    Ok(cm)
}

/// An exact proportion, or undefined when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Defined(Ratio<u64>),
    Undefined,
}

impl Metric {
    fn of(num: u64, den: u64) -> Metric {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Defined(Ratio::new(num, den))
        }
    }

    pub fn ratio(&self) -> Option<Ratio<u64>> {
        match self {
            Metric::Defined(r) => Some(*r),
            Metric::Undefined => None,
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.ratio().map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Defined(r) => f.write_str(&decimal3(*r)),
            Metric::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.to_f64() {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_none(),
        }
    }
}

/// Renders a proportion with three decimals, rounding half up exactly.
pub fn decimal3(r: Ratio<u64>) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let scaled = (2000 * n + d) / (2 * d);
    format!("{}.{:03}", scaled / 1000, scaled % 1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: Ratio<u64>,
    pub mcr: Ratio<u64>,
    pub sensitivity: Metric,
    pub specificity: Metric,
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MetricsReport", 9)?;
        st.serialize_field("accuracy", &Metric::Defined(self.accuracy))?;
        st.serialize_field("mcr", &Metric::Defined(self.mcr))?;
        st.serialize_field("sensitivity", &self.sensitivity)?;
        st.serialize_field("specificity", &self.specificity)?;
        st.serialize_field("tp", &self.confusion.true_pos)?;
        st.serialize_field("fn", &self.confusion.false_neg)?;
        st.serialize_field("fp", &self.confusion.false_pos)?;
        st.serialize_field("tn", &self.confusion.true_neg)?;
        st.serialize_field("total", &self.confusion.total())?;
        st.end()
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let accuracy = Ratio::new(cm.true_pos + cm.true_neg, total);
    Ok(MetricsReport {
        confusion: *cm,
        accuracy,
        mcr: Ratio::new(cm.false_neg + cm.false_pos, total),
        sensitivity: Metric::of(cm.true_pos, cm.true_pos + cm.false_neg),
        specificity: Metric::of(cm.true_neg, cm.true_neg + cm.false_pos),
    })
}

pub fn score(predicted: &[Label], truth: &[Label]) -> Result<MetricsReport, EvalError> {
    metrics(&confusion(predicted, truth)?)
}

/// Counts of (feature value, label) pairs over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct CrossTab {
    pub true_spam: u64,
    pub true_non_spam: u64,
    pub false_spam: u64,
    pub false_non_spam: u64,
}

pub fn cross_classify(feature: &Feature, corpus: &Corpus) -> CrossTab {
    let mut tab = CrossTab::default();
    for item in corpus.iter() {
        match (feature.eval(&item.text), item.label) {
            (true, Label::Spam) => tab.true_spam += 1,
            (true, Label::NonSpam) => tab.true_non_spam += 1,
            (false, Label::Spam) => tab.false_spam += 1,
            (false, Label::NonSpam) => tab.false_non_spam += 1,
        }
    }
    tab
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub train: MetricsReport,
    pub test: Option<MetricsReport>,
}

/// Train and test metrics for several models on the same two corpora.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Scores every model on `train` and, when non-empty, on `test`. Row order
/// follows `models`.
pub fn compare(models: &[(&str, &dyn TextClassifier)], train: &Corpus, test: &Corpus) -> Result<ComparisonTable, Error> {
    if models.is_empty() {
        return Err(EvalError::NoModels.into());
    }
    let mut rows: Vec<ComparisonRow> = Vec::with_capacity(models.len());
    for (name, model) in models {
        if rows.iter().any(|r| r.model == *name) {
            return Err(EvalError::DuplicateModelName(name.to_string()).into());
        }
        let train_report = score(&model.classify_corpus(train)?, &train.labels())?;
        let test_report = if test.is_empty() {
            None
        } else {
            Some(score(&model.classify_corpus(test)?, &test.labels())?)
        };
        rows.push(ComparisonRow {
            model: name.to_string(),
            train: train_report,
            test: test_report,
        });
    }
    Ok(ComparisonTable { rows })
}

const HEADERS: [&str; 10] = ["model", "data", "accuracy", "MCR", "sensitivity", "specificity", "TP", "FN", "FP", "TN"];

fn report_cells(model: &str, data: &str, r: &MetricsReport) -> Vec<String> {
    vec![
        model.to_string(),
        data.to_string(),
        decimal3(r.accuracy),
        decimal3(r.mcr),
        r.sensitivity.to_string(),
        r.specificity.to_string(),
        r.confusion.true_pos.to_string(),
        r.confusion.false_neg.to_string(),
        r.confusion.false_pos.to_string(),
        r.confusion.true_neg.to_string(),
    ]
}

fn render(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..HEADERS.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([HEADERS[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let header: Vec<String> = HEADERS.iter().map(|h| h.to_string()).collect();
    for row in std::iter::once(&header).chain(rows) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| if c < 2 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

impl MetricsReport {
    /// Aligned-column text table with a single row.
    pub fn to_table(&self, model: &str, data: &str) -> String {
        render(&[report_cells(model, data, self)])
    }
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let mut rows = Vec::new();
        for row in &self.rows {
            rows.push(report_cells(&row.model, "train", &row.train));
            if let Some(test) = &row.test {
                rows.push(report_cells(&row.model, "test", test));
            }
        }
        render(&rows)
    }
}
