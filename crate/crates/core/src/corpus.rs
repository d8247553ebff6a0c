//! Labeled subject-line datasets.
//!
//! A [`Corpus`] is an ordered, immutable list of [`LabeledSubject`]s. Corpora
//! are read from and written to CSV with two required columns, `subject` and
//! `label`, where labels are `spam` or `non-spam` (case-insensitive).

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("missing required column `{0}` in CSV header")]
    MissingColumn(&'static str),
    #[error("row {row}: bad label {value:?} (expected \"spam\" or \"non-spam\")")]
    BadLabel { row: u64, value: String },
    #[error("row {row}: empty subject line")]
    EmptySubject { row: u64 },
    #[error("corpus has no data rows")]
    EmptyCorpus,
    #[error("malformed CSV at row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("train fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("I/O error: {0}")]
    Io(String),
}

/// The two classes. Spam is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "spam")]
    Spam,
    #[serde(rename = "non-spam")]
    NonSpam,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spam => "spam",
            Label::NonSpam => "non-spam",
        }
    }

    pub fn is_spam(self) -> bool {
        self == Label::Spam
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Spam => Label::NonSpam,
            Label::NonSpam => Label::Spam,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("spam") {
            Ok(Label::Spam)
        } else if s.eq_ignore_ascii_case("non-spam") {
            Ok(Label::NonSpam)
        } else {
            Err(s.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSubject {
    pub text: String,
    pub label: Label,
}

impl LabeledSubject {
    pub fn new(text: impl Into<String>, label: Label) -> Self {
        LabeledSubject {
            text: text.into(),
            label,
        }
    }
}

/// Ordered collection of labeled subject lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    name: String,
    items: Vec<LabeledSubject>,
}

/// How to cut a corpus into training and testing parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.5,
            seed: 0,
            stratified: true,
        }
    }
}

fn subject_is_blank(text: &str) -> bool {
    text.trim_end_matches(['\r', '\n']).is_empty()
}

impl Corpus {
    pub fn new(name: impl Into<String>, items: Vec<LabeledSubject>) -> Self {
        Corpus {
            name: name.into(),
            items,
        }
    }

    /// Reads a corpus from CSV. The header must name `subject` and `label`
    /// columns; other columns are ignored. Row numbers in errors count data
    /// rows from 1.
    pub fn load_csv<R: Read>(name: impl Into<String>, source: R) -> Result<Corpus, CorpusError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(source);
        let headers = reader.headers().map_err(|e| csv_error(e, 0))?.clone();
        let column = |want: &'static str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(want))
                .ok_or(CorpusError::MissingColumn(want))
        };
        let subject_col = column("subject")?;
        let label_col = column("label")?;

        let mut items = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i as u64 + 1;
            let record = record.map_err(|e| csv_error(e, row))?;
            let text = record.get(subject_col).unwrap_or_default();
            let raw_label = record.get(label_col).unwrap_or_default();
            let label = raw_label
                .trim()
                .parse::<Label>()
                .map_err(|value| CorpusError::BadLabel { row, value })?;
            if subject_is_blank(text) {
                return Err(CorpusError::EmptySubject { row });
            }
            items.push(LabeledSubject::new(text, label));
        }
        if items.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(Corpus::new(name, items))
    }

    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<Corpus, CorpusError> {
        Corpus::load_csv(name, text.as_bytes())
    }

    /// Writes the corpus as `subject,label` CSV; fields are quoted as needed.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let mut writer = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CorpusError::Io(e.to_string());
        writer.write_record(["subject", "label"]).map_err(io)?;
        for item in &self.items {
            writer
                .write_record([item.text.as_str(), item.label.as_str()])
                .map_err(io)?;
        }
        writer.flush().map_err(|e| CorpusError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output of UTF-8 input is UTF-8")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn items(&self) -> &[LabeledSubject] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSubject> {
        self.items.iter()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.items.iter().filter(|i| i.label == label).count()
    }

    /// Proportion of spam, as an exact fraction.
    pub fn class_balance(&self) -> Result<Ratio<u64>, CorpusError> {
        if self.items.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(Ratio::new(self.count(Label::Spam) as u64, self.items.len() as u64))
    }

    /// Drops repeated (text, label) pairs, keeping the first occurrence.
    pub fn dedup(&self) -> Corpus {
        let mut seen = HashSet::new();
        let items = self
            .items
            .iter()
            .filter(|item| seen.insert((*item).clone()))
            .cloned()
            .collect();
        Corpus::new(self.name.clone(), items)
    }

    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Corpus {
        Corpus::new(name, indices.iter().map(|&i| self.items[i].clone()).collect())
    }

    /// Index partition behind [`Corpus::split`]. Both index lists are
    /// ascending, so each part keeps the corpus order.
    pub fn split_indices(&self, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
        if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
            return Err(CorpusError::InvalidFraction(spec.train_fraction));
        }
        if self.items.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let groups: Vec<Vec<usize>> = if spec.stratified {
            [Label::Spam, Label::NonSpam]
                .iter()
                .map(|&label| {
                    (0..self.items.len())
                        .filter(|&i| self.items[i].label == label)
                        .collect()
                })
                .collect()
        } else {
            vec![(0..self.items.len()).collect()]
        };

        let mut train = Vec::new();
        let mut test = Vec::new();
        for mut group in groups {
            shuffle(&mut group, &mut rng);
            let cut = train_count(group.len(), spec.train_fraction);
            train.extend_from_slice(&group[..cut]);
            test.extend_from_slice(&group[cut..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((train, test))
    }

    pub fn split(&self, spec: &SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
        let (train, test) = self.split_indices(spec)?;
        Ok((
            self.subset(format!("{}-train", self.name), &train),
            self.subset(format!("{}-test", self.name), &test),
        ))
    }
}

/// Number of items of a group that go to the training side: the fraction of
/// the group size rounded half away from zero, clamped to the group size.
pub fn train_count(group_size: usize, train_fraction: f64) -> usize {
    let cut = (train_fraction * group_size as f64).round() as usize;
    cut.min(group_size)
}

// Fisher-Yates, drawing u64 bounds so the sequence does not depend on usize width.
fn shuffle(items: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}

fn csv_error(err: csv::Error, fallback_row: u64) -> CorpusError {
    let row = err
        .position()
        .map(|p| p.record())
        .unwrap_or(fallback_row);
    match err.kind() {
        csv::ErrorKind::Io(e) => CorpusError::Io(e.to_string()),
        _ => CorpusError::Malformed {
            row,
            message: err.to_string(),
        },
    }
}
