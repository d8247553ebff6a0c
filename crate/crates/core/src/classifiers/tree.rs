use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{check_dimension, Classifier, ModelError, Prediction};
use crate::corpus::Label;
use crate::textfeat::{FeatureMatrix, FeatureSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub spam: u64,
    pub non_spam: u64,
}

impl ClassCounts {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::Spam => self.spam += 1,
            Label::NonSpam => self.non_spam += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.spam + self.non_spam
    }

    /// Majority class; ties go to non-spam.
    pub fn majority(&self) -> Label {
        if self.spam > self.non_spam { Label::Spam } else { Label::NonSpam }
    }

    /// Spam share of the counts, or 0.5 when there are none.
    pub fn spam_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.5
        } else {
            self.spam as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        verdict: Label,
        counts: ClassCounts,
    },
    Split {
        feature: usize,
        if_false: Box<TreeNode>,
        if_true: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(verdict: Label) -> TreeNode {
        TreeNode::Leaf {
            verdict,
            counts: ClassCounts::default(),
        }
    }

    pub fn split(feature: usize, if_false: TreeNode, if_true: TreeNode) -> TreeNode {
        TreeNode::Split {
            feature,
            if_false: Box::new(if_false),
            if_true: Box::new(if_true),
        }
    }

    /// Follows `x` to a leaf; `x` must cover every feature index in the tree.
    pub fn route(&self, x: &[bool]) -> (&Label, &ClassCounts) {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { verdict, counts } => return (verdict, counts),
                TreeNode::Split {
                    feature,
                    if_false,
                    if_true,
                } => node = if x[*feature] { if_true } else { if_false },
            }
        }
    }

    fn route_mut(&mut self, x: &[bool]) -> &mut ClassCounts {
        match self {
            TreeNode::Leaf { counts, .. } => counts,
            TreeNode::Split {
                feature,
                if_false,
                if_true,
            } => {
                if x[*feature] {
                    if_true.route_mut(x)
                } else {
                    if_false.route_mut(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { if_false, if_true, .. } => 1 + if_false.depth().max(if_true.depth()),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                if_false,
                if_true,
            } => [Some(*feature), if_false.max_feature_index(), if_true.max_feature_index()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    /// Feature index of the root split, if the root is not a leaf.
    pub fn root_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Split { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        }
    }

    /// Same tree with feature indices replaced by names.
    pub fn describe(&self, names: &[String]) -> ManualTreeSpec {
        match self {
            TreeNode::Leaf { verdict, counts } => ManualTreeSpec::Leaf {
                leaf: *verdict,
                counts: Some(*counts),
            },
            TreeNode::Split {
                feature,
                if_false,
                if_true,
            } => ManualTreeSpec::Split {
                split: names[*feature].clone(),
                if_true: Box::new(if_true.describe(names)),
                if_false: Box::new(if_false.describe(names)),
            },
        }
    }
}

/// Split quality criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Impurity {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub impurity: Impurity,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_leaf: 2,
            impurity: Impurity::Gini,
        }
    }
}

/// A tree together with the width of the feature vectors it accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_features: usize,
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[bool]) -> Result<Prediction, ModelError> {
        check_dimension(self.n_features, x)?;
        let (verdict, counts) = self.root.route(x);
        Ok(Prediction {
            label: *verdict,
            score: counts.spam_fraction(),
        })
    }
}

// Score to minimize for a candidate split; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum SplitScore {
    Gini(Ratio<u128>),
    Entropy(f64),
}

/// Sum over children of `n_child * impurity(child)`, for Gini kept exact:
/// n * gini = 2 * spam * non_spam / n.
fn weighted_impurity(impurity: Impurity, parts: &[ClassCounts]) -> SplitScore {
    match impurity {
        Impurity::Gini => SplitScore::Gini(
            parts
                .iter()
                .filter(|c| c.total() > 0)
                .map(|c| Ratio::new(2 * c.spam as u128 * c.non_spam as u128, c.total() as u128))
                .sum(),
        ),
        Impurity::Entropy => SplitScore::Entropy(
            parts
                .iter()
                .filter(|c| c.total() > 0)
                .map(|c| {
                    let n = c.total() as f64;
                    let h: f64 = [c.spam, c.non_spam]
                        .iter()
                        .filter(|&&k| k > 0)
                        .map(|&k| {
                            let p = k as f64 / n;
                            -p * p.log2()
                        })
                        .sum();
                    n * h
                })
                .sum(),
        ),
    }
}

fn improves(candidate: SplitScore, reference: SplitScore) -> bool {
    match (candidate, reference) {
        (SplitScore::Gini(a), SplitScore::Gini(b)) => a < b,
        (SplitScore::Entropy(a), SplitScore::Entropy(b)) => a < b - 1e-12,
        _ => unreachable!("scores of one tree share a criterion"),
    }
}

fn counts_of(matrix: &FeatureMatrix, rows: &[usize]) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for &i in rows {
        counts.add(matrix.labels[i]);
    }
    counts
}

/// Grows a tree on `rows` of `matrix`. `candidates` is asked, once per
/// split attempt, for the ascending feature indices that may be used there.
pub(crate) fn grow(
    matrix: &FeatureMatrix,
    rows: &[usize],
    depth: usize,
    config: &TreeConfig,
    candidates: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    let counts = counts_of(matrix, rows);
    let leaf = TreeNode::Leaf {
        verdict: counts.majority(),
        counts,
    };
    let min_leaf = config.min_leaf.max(1);
    if depth >= config.max_depth
        || counts.spam == 0
        || counts.non_spam == 0
        || rows.len() < 2 * min_leaf
    {
        return leaf;
    }

    let mut best: Option<(usize, SplitScore)> = None;
    let parent = weighted_impurity(config.impurity, &[counts]);
    for j in candidates() {
        let (mut on, mut off) = (ClassCounts::default(), ClassCounts::default());
        for &i in rows {
            if matrix.rows[i][j] {
                on.add(matrix.labels[i]);
            } else {
                off.add(matrix.labels[i]);
            }
        }
        if (on.total() as usize) < min_leaf || (off.total() as usize) < min_leaf {
            continue;
        }
        let score = weighted_impurity(config.impurity, &[off, on]);
        let reference = best.map_or(parent, |(_, s)| s);
        if improves(score, reference) {
            best = Some((j, score));
        }
    }

    let Some((feature, _)) = best else {
        return leaf;
    };
    let (on_rows, off_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| matrix.rows[i][feature]);
    let if_false = grow(matrix, &off_rows, depth + 1, config, candidates);
    let if_true = grow(matrix, &on_rows, depth + 1, config, candidates);
    TreeNode::split(feature, if_false, if_true)
}

/// Greedy recursive partitioning on binary features. Each split maximizes
/// the impurity decrease, ties going to the lowest feature index.
pub fn induce_tree(matrix: &FeatureMatrix, config: &TreeConfig) -> Result<DecisionTree, ModelError> {
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    let all: Vec<usize> = (0..matrix.n_features()).collect();
    let root = grow(matrix, &rows, 0, config, &mut || all.clone());
    Ok(DecisionTree {
        root,
        n_features: matrix.n_features(),
    })
}

/// Hand-written tree description, e.g.
/// `{"split": "dear_or_bless", "if_true": {"leaf": "spam"}, "if_false": {"leaf": "non-spam"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawSpec")]
pub enum ManualTreeSpec {
    Leaf {
        leaf: Label,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counts: Option<ClassCounts>,
    },
    Split {
        split: String,
        if_true: Box<ManualTreeSpec>,
        if_false: Box<ManualTreeSpec>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    leaf: Option<Label>,
    counts: Option<ClassCounts>,
    split: Option<String>,
    if_true: Option<Box<ManualTreeSpec>>,
    if_false: Option<Box<ManualTreeSpec>>,
}

impl TryFrom<RawSpec> for ManualTreeSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> Result<Self, String> {
        match raw {
            RawSpec {
                leaf: Some(leaf),
                counts,
                split: None,
                if_true: None,
                if_false: None,
            } => Ok(ManualTreeSpec::Leaf { leaf, counts }),
            RawSpec {
                leaf: None,
                counts: None,
                split: Some(split),
                if_true: Some(if_true),
                if_false: Some(if_false),
            } => Ok(ManualTreeSpec::Split {
                split,
                if_true,
                if_false,
            }),
            _ => Err("a node needs either `leaf` or all of `split`, `if_true` and `if_false`".into()),
        }
    }
}

impl ManualTreeSpec {
    pub fn leaf(label: Label) -> Self {
        ManualTreeSpec::Leaf {
            leaf: label,
            counts: None,
        }
    }

    pub fn split(feature: &str, if_true: ManualTreeSpec, if_false: ManualTreeSpec) -> Self {
        ManualTreeSpec::Split {
            split: feature.to_string(),
            if_true: Box::new(if_true),
            if_false: Box::new(if_false),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::MalformedTree(e.to_string()))
    }

    fn resolve(&self, features: &FeatureSet) -> Result<TreeNode, ModelError> {
        Ok(match self {
            ManualTreeSpec::Leaf { leaf, .. } => TreeNode::leaf(*leaf),
            ManualTreeSpec::Split {
                split,
                if_true,
                if_false,
            } => TreeNode::split(
                features
                    .index_of(split)
                    .ok_or_else(|| ModelError::UnknownFeature(split.clone()))?,
                if_false.resolve(features)?,
                if_true.resolve(features)?,
            ),
        })
    }
}

/// Builds the tree exactly as described. When `training` is given its rows
/// are routed through the tree to fill the leaf counts; verdicts are never
/// changed.
pub fn build_manual_tree(
    spec: &ManualTreeSpec,
    features: &FeatureSet,
    training: Option<&FeatureMatrix>,
) -> Result<DecisionTree, ModelError> {
    let mut root = spec.resolve(features)?;
    if let Some(matrix) = training {
        if matrix.n_features() != features.len() {
            return Err(ModelError::DimensionMismatch {
                expected: features.len(),
                found: matrix.n_features(),
            });
        }
        for (row, &label) in matrix.rows.iter().zip(&matrix.labels) {
            root.route_mut(row).add(label);
        }
    }
    Ok(DecisionTree {
        root,
        n_features: features.len(),
    })
}
