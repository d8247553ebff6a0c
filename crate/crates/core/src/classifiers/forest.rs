use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeConfig, TreeNode};
use super::{check_dimension, Classifier, ModelError, Prediction};
use crate::corpus::Label;
use crate::textfeat::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features considered per split; `None` means ceil(sqrt(p)).
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeConfig,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            bootstrap: true,
            seed: 0,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
    pub n_trees: usize,
    pub mtry: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of tree number `t` (1-based) in a forest seeded with `seed`.
pub fn tree_seed(seed: u64, t: u64) -> u64 {
    splitmix64(seed ^ splitmix64(t))
}

pub fn default_mtry(p: usize) -> usize {
    (p as f64).sqrt().ceil() as usize
}

/// Trains `n_trees` trees, each on its own seeded bootstrap sample with a
/// seeded feature subset at every split. Trees are grown in parallel; the
/// result does not depend on scheduling.
pub fn fit_forest(matrix: &FeatureMatrix, config: &ForestConfig) -> Result<ForestModel, ModelError> {
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    if config.n_trees == 0 {
        return Err(ModelError::BadHyperparameter("n_trees must be at least 1".into()));
    }
    let p = matrix.n_features();
    let mtry = config.mtry.unwrap_or_else(|| default_mtry(p));
    if p > 0 && !(1..=p).contains(&mtry) {
        return Err(ModelError::BadHyperparameter(format!("mtry {mtry} must be in 1..={p}")));
    }
    let n = matrix.n_rows();

    let trees = (1..=config.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(config.seed, t));
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n as u64) as usize).collect()
            } else {
                (0..n).collect()
            };
            let mut candidates = || sample_features(&mut rng, p, mtry);
            grow(matrix, &rows, 0, &config.tree, &mut candidates)
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_features: p,
        n_trees: config.n_trees,
        mtry,
        bootstrap: config.bootstrap,
        seed: config.seed,
    })
}

// Ascending sample of `k` distinct indices out of `0..p` (all of them when k >= p).
fn sample_features(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..p).collect();
    if k >= p {
        return all;
    }
    for i in 0..k {
        let j = rng.random_range(i as u64..p as u64) as usize;
        all.swap(i, j);
    }
    all.truncate(k);
    all.sort_unstable();
    all
}

impl ForestModel {
    pub fn spam_votes(&self, x: &[bool]) -> Result<usize, ModelError> {
        check_dimension(self.n_features, x)?;
        Ok(self
            .trees
            .iter()
            .filter(|t| t.route(x).0.is_spam())
            .count())
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote; a tie is non-spam.
    fn predict(&self, x: &[bool]) -> Result<Prediction, ModelError> {
        let votes = self.spam_votes(x)?;
        let total = self.trees.len();
        Ok(Prediction {
            label: if 2 * votes > total { Label::Spam } else { Label::NonSpam },
            score: votes as f64 / total as f64,
        })
    }
}
