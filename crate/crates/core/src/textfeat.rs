//! Tokenization and binary feature extraction.
//!
//! Features are declared as data ([`FeatureDef`], serializable to JSON as
//! `{"name": ..., "kind": ..., ...}`) and compiled into a [`FeatureSet`].
//! Compilation is where validation happens: bad names, empty word lists and
//! regexes that do not compile are all rejected there, so evaluating a
//! compiled feature never fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("invalid feature name {0:?} (expected [a-z][a-z0-9_]*)")]
    BadName(String),
    #[error("duplicate feature name {0:?}")]
    DuplicateFeatureName(String),
    #[error("feature {0:?}: word list is empty")]
    EmptyWordList(String),
    #[error("feature {0:?}: bag word is empty")]
    EmptyBagWord(String),
    #[error("feature {0:?}: min_count must be positive")]
    BadMinCount(String),
    #[error("bad regex {pattern:?}: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("min_freq must be a positive integer")]
    BadMinFreq,
}

/// Lowercases `text` and splits it on maximal runs of non-alphanumeric
/// characters. Digits are token characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Count of ASCII punctuation characters (ASCII, not alphanumeric, not
/// whitespace).
pub fn punct_count(text: &str) -> usize {
    text.chars().filter(char::is_ascii_punctuation).count()
}

pub fn is_all_caps(text: &str) -> bool {
    let mut letters = text.chars().filter(|c| c.is_alphabetic()).peekable();
    letters.peek().is_some() && letters.all(char::is_uppercase)
}

/// True when strictly more than half of the alphabetic characters are
/// uppercase.
pub fn is_majority_caps(text: &str) -> bool {
    let (upper, letters) = text
        .chars()
        .filter(|c| c.is_alphabetic())
        .fold((0usize, 0usize), |(u, n), c| (u + c.is_uppercase() as usize, n + 1));
    2 * upper > letters
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

fn default_true() -> bool {
    true
}

fn default_min_count() -> u32 {
    2
}

/// A named feature declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// Any token of the subject is in the list (whole-token, case-insensitive).
    WordList { words: BTreeSet<String> },
    /// Literal containment on the raw text.
    Substring {
        pattern: String,
        #[serde(default = "default_true")]
        case_sensitive: bool,
    },
    /// Unanchored regex match on the raw text.
    Regex { pattern: String },
    AllCaps,
    ContainsDollar,
    MultiPunct {
        #[serde(default = "default_min_count")]
        min_count: u32,
    },
    /// More than half of the letters are uppercase.
    MajorityCaps,
    BagWord { word: String },
}

impl FeatureDef {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        FeatureDef {
            name: name.into(),
            kind,
        }
    }

    pub fn word_list<I, S>(name: &str, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FeatureDef::new(
            name,
            FeatureKind::WordList {
                words: words.into_iter().map(Into::into).collect(),
            },
        )
    }

    pub fn bag_word(name: &str, word: &str) -> Self {
        FeatureDef::new(name, FeatureKind::BagWord { word: word.into() })
    }

    pub fn compile(&self) -> Result<Feature, FeatureError> {
        Feature::compile(self.clone())
    }
}

#[derive(Debug, Clone)]
enum Matcher {
    Words(BTreeSet<String>),
    Substring { pattern: String, case_sensitive: bool },
    Regex(Regex),
    AllCaps,
    Dollar,
    MultiPunct(usize),
    MajorityCaps,
    Word(String),
}

/// A validated, ready-to-evaluate feature.
#[derive(Debug, Clone)]
pub struct Feature {
    def: FeatureDef,
    matcher: Matcher,
}

impl Feature {
    pub fn compile(def: FeatureDef) -> Result<Feature, FeatureError> {
        if !is_valid_name(&def.name) {
            return Err(FeatureError::BadName(def.name));
        }
        let matcher = match &def.kind {
            FeatureKind::WordList { words } => {
                let words: BTreeSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
                if words.is_empty() || words.iter().all(String::is_empty) {
                    return Err(FeatureError::EmptyWordList(def.name));
                }
                Matcher::Words(words)
            }
            FeatureKind::Substring {
                pattern,
                case_sensitive,
            } => Matcher::Substring {
                pattern: if *case_sensitive {
                    pattern.clone()
                } else {
                    pattern.to_lowercase()
                },
                case_sensitive: *case_sensitive,
            },
            FeatureKind::Regex { pattern } => {
                Matcher::Regex(Regex::new(pattern).map_err(|e| FeatureError::BadRegex {
                    pattern: pattern.clone(),
                    message: e.to_string(),
                })?)
            }
            FeatureKind::AllCaps => Matcher::AllCaps,
            FeatureKind::ContainsDollar => Matcher::Dollar,
            FeatureKind::MultiPunct { min_count } => {
                if *min_count == 0 {
                    return Err(FeatureError::BadMinCount(def.name));
                }
                Matcher::MultiPunct(*min_count as usize)
            }
            FeatureKind::MajorityCaps => Matcher::MajorityCaps,
            FeatureKind::BagWord { word } => {
                if word.is_empty() {
                    return Err(FeatureError::EmptyBagWord(def.name));
                }
                Matcher::Word(word.to_lowercase())
            }
        };
        Ok(Feature { def, matcher })
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn def(&self) -> &FeatureDef {
        &self.def
    }

    pub fn eval(&self, text: &str) -> bool {
        let tokens: HashSet<String> = match self.matcher {
            Matcher::Words(_) | Matcher::Word(_) => tokenize(text).into_iter().collect(),
            _ => HashSet::new(),
        };
        self.eval_with_tokens(text, &tokens)
    }

    /// Evaluates with a precomputed token set of `text`.
    fn eval_with_tokens(&self, text: &str, tokens: &HashSet<String>) -> bool {
        match &self.matcher {
            Matcher::Words(words) => words.iter().any(|w| tokens.contains(w)),
            Matcher::Word(w) => tokens.contains(w),
            Matcher::Substring {
                pattern,
                case_sensitive: true,
            } => text.contains(pattern.as_str()),
            Matcher::Substring { pattern, .. } => text.to_lowercase().contains(pattern.as_str()),
            Matcher::Regex(re) => re.is_match(text),
            Matcher::AllCaps => is_all_caps(text),
            Matcher::Dollar => text.contains('$'),
            Matcher::MultiPunct(min) => punct_count(text) >= *min,
            Matcher::MajorityCaps => is_majority_caps(text),
        }
    }

    fn needs_tokens(&self) -> bool {
        matches!(self.matcher, Matcher::Words(_) | Matcher::Word(_))
    }
}

/// Compiles `def` and evaluates it on `text`.
pub fn eval_feature(def: &FeatureDef, text: &str) -> Result<bool, FeatureError> {
    Ok(def.compile()?.eval(text))
}

/// Ordered, uniquely named list of compiled features.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDef>", into = "Vec<FeatureDef>")]
pub struct FeatureSet {
    features: Vec<Feature>,
}

impl PartialEq for FeatureSet {
    fn eq(&self, other: &Self) -> bool {
        self.defs().eq(other.defs())
    }
}

impl TryFrom<Vec<FeatureDef>> for FeatureSet {
    type Error = FeatureError;

    fn try_from(defs: Vec<FeatureDef>) -> Result<Self, Self::Error> {
        FeatureSet::new(defs)
    }
}

impl From<FeatureSet> for Vec<FeatureDef> {
    fn from(set: FeatureSet) -> Self {
        set.features.into_iter().map(|f| f.def).collect()
    }
}

impl FeatureSet {
    pub fn new(defs: Vec<FeatureDef>) -> Result<FeatureSet, FeatureError> {
        let mut seen = HashSet::new();
        let mut features = Vec::with_capacity(defs.len());
        for def in defs {
            if !seen.insert(def.name.clone()) {
                return Err(FeatureError::DuplicateFeatureName(def.name));
            }
            features.push(Feature::compile(def)?);
        }
        Ok(FeatureSet { features })
    }

    pub fn from_json(text: &str) -> Result<FeatureSet, crate::Error> {
        let defs: Vec<FeatureDef> = serde_json::from_str(text)
            .map_err(|e| crate::Error::Format(format!("feature definitions: {e}")))?;
        Ok(FeatureSet::new(defs)?)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn defs(&self) -> impl Iterator<Item = &FeatureDef> {
        self.features.iter().map(|f| &f.def)
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.def.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.def.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.def.name == name)
    }

    /// Keeps only the named features, in the order given.
    pub fn select(&self, names: &[String]) -> Result<FeatureSet, FeatureError> {
        let defs = names
            .iter()
            .map(|n| {
                self.get(n)
                    .map(|f| f.def.clone())
                    .ok_or_else(|| FeatureError::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        FeatureSet::new(defs)
    }

    /// Appends one bag-of-words feature per vocabulary entry. Words that are
    /// not valid feature names, or clash with an existing name, get a
    /// sanitized name.
    pub fn with_bag_of_words(&self, vocabulary: &Vocabulary) -> FeatureSet {
        let mut taken: HashSet<String> = self.names().into_iter().collect();
        let mut defs: Vec<FeatureDef> = self.defs().cloned().collect();
        for entry in &vocabulary.entries {
            let name = bag_feature_name(&entry.word, &taken);
            taken.insert(name.clone());
            defs.push(FeatureDef::bag_word(&name, &entry.word));
        }
        FeatureSet::new(defs).expect("generated bag-of-words names are unique and valid")
    }

    pub fn vectorize(&self, text: &str) -> FeatureVector {
        FeatureVector {
            feature_names: self.names(),
            values: self.values(text),
        }
    }

    pub fn values(&self, text: &str) -> Vec<bool> {
        let tokens: HashSet<String> = if self.features.iter().any(Feature::needs_tokens) {
            tokenize(text).into_iter().collect()
        } else {
            HashSet::new()
        };
        self.features
            .iter()
            .map(|f| f.eval_with_tokens(text, &tokens))
            .collect()
    }

    pub fn featurize(&self, corpus: &Corpus) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: self.names(),
            rows: corpus.iter().map(|item| self.values(&item.text)).collect(),
            labels: corpus.labels(),
        }
    }
}

fn bag_feature_name(word: &str, taken: &HashSet<String>) -> String {
    let base = if is_valid_name(word) {
        word.to_string()
    } else {
        let cleaned: String = word
            .chars()
            .map(|c| if c.is_ascii_lowercase() || c.is_ascii_digit() { c } else { '_' })
            .collect();
        format!("w_{cleaned}")
    };
    if !taken.contains(&base) {
        return base;
    }
    let base = format!("bow_{}", base.trim_start_matches("w_"));
    (1..)
        .map(|i| if i == 1 { base.clone() } else { format!("{base}_{i}") })
        .find(|n| !taken.contains(n))
        .expect("unbounded search")
}

/// Checks names and compiles `defs`, then featurizes `corpus`.
pub fn featurize(corpus: &Corpus, defs: &[FeatureDef]) -> Result<FeatureMatrix, FeatureError> {
    Ok(FeatureSet::new(defs.to_vec())?.featurize(corpus))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub feature_names: Vec<String>,
    pub values: Vec<bool>,
}

/// Binary design matrix with aligned labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<bool>>,
    pub labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<bool>>, labels: Vec<Label>) -> Self {
        assert_eq!(rows.len(), labels.len(), "rows and labels must align");
        assert!(
            rows.iter().all(|r| r.len() == feature_names.len()),
            "every row must have one value per feature"
        );
        FeatureMatrix {
            feature_names,
            rows,
            labels,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// CSV rendering with `label` followed by one 0/1 column per feature.
    pub fn to_csv(&self, subjects: Option<&[String]>) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = Vec::new();
        if subjects.is_some() {
            header.push("subject".to_string());
        }
        header.push("label".to_string());
        header.extend(self.feature_names.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (i, row) in self.rows.iter().enumerate() {
            let mut record = Vec::with_capacity(row.len() + 2);
            if let Some(s) = subjects {
                record.push(s[i].clone());
            }
            record.push(self.labels[i].as_str().to_string());
            record.extend(row.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
            writer.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// How word frequencies are counted when building a vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Number of subject lines that contain the word.
    #[default]
    Document,
    /// Total number of occurrences across all lines.
    Occurrence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub word: String,
    pub count: usize,
}

/// Words frequent enough to become bag-of-words features, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entries: Vec<VocabEntry>,
    pub min_freq: usize,
    pub mode: CountMode,
}

pub const DEFAULT_MIN_FREQ: usize = 4;

impl Vocabulary {
    pub fn build(corpus: &Corpus, min_freq: usize, mode: CountMode) -> Result<Vocabulary, FeatureError> {
        if min_freq == 0 {
            return Err(FeatureError::BadMinFreq);
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for item in corpus.iter() {
            let tokens = tokenize(&item.text);
            match mode {
                CountMode::Document => {
                    for t in tokens.into_iter().collect::<BTreeSet<_>>() {
                        *counts.entry(t).or_default() += 1;
                    }
                }
                CountMode::Occurrence => {
                    for t in tokens {
                        *counts.entry(t).or_default() += 1;
                    }
                }
            }
        }
        let mut entries: Vec<VocabEntry> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_freq)
            .map(|(word, count)| VocabEntry { word, count })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        Ok(Vocabulary {
            entries,
            min_freq,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.iter().any(|e| e.word == word)
    }

    pub fn words(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.word.as_str()).collect()
    }
}

/// Document-frequency vocabulary with the given threshold.
pub fn build_vocabulary(corpus: &Corpus, min_freq: usize) -> Result<Vocabulary, FeatureError> {
    Vocabulary::build(corpus, min_freq, CountMode::Document)
}

/// Ready-made feature definitions.
pub mod presets {
    use super::{FeatureDef, FeatureKind, FeatureSet};

    /// Word list that flags greetings and pleas: dear, bless, almighty, urgent.
    pub fn dear_or_bless() -> FeatureDef {
        FeatureDef::word_list("dear_or_bless", ["dear", "bless", "almighty", "urgent"])
    }

    /// Case-sensitive substring "Re".
    pub fn contains_re() -> FeatureDef {
        FeatureDef::new(
            "contains_re",
            FeatureKind::Substring {
                pattern: "Re".into(),
                case_sensitive: true,
            },
        )
    }

    pub fn all_caps() -> FeatureDef {
        FeatureDef::new("all_caps", FeatureKind::AllCaps)
    }

    pub fn dollar() -> FeatureDef {
        FeatureDef::new("dollar", FeatureKind::ContainsDollar)
    }

    pub fn multi_punct() -> FeatureDef {
        FeatureDef::new("multi_punct", FeatureKind::MultiPunct { min_count: 2 })
    }

    pub fn dear_or_mister() -> FeatureDef {
        FeatureDef::word_list("dear_or_mister", ["dear", "mister"])
    }

    pub fn religious() -> FeatureDef {
        FeatureDef::word_list(
            "religious",
            ["bless", "blessed", "almighty", "pray", "god", "faith"],
        )
    }

    pub fn caps_ratio_gt_half() -> FeatureDef {
        FeatureDef::new("caps_ratio_gt_half", FeatureKind::MajorityCaps)
    }

    /// The five interactive-app features: all caps, dollar sign, multiple
    /// punctuation, "dear"/"mister", religious words.
    pub fn shiny() -> Vec<FeatureDef> {
        vec![all_caps(), dollar(), multi_punct(), dear_or_mister(), religious()]
    }

    /// Every preset, usable as the default vocabulary for rules.
    pub fn standard() -> FeatureSet {
        let mut defs = shiny();
        defs.extend([dear_or_bless(), contains_re(), caps_ratio_gt_half()]);
        FeatureSet::new(defs).expect("presets are valid")
    }
}
