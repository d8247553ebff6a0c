use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_dimension, check_threshold, label_for, Classifier, ModelError, Prediction};
use crate::corpus::Label;
use crate::textfeat::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub spam: T,
    pub non_spam: T,
}

impl<T> PerClass<T> {
    pub fn get(&self, label: Label) -> &T {
        match label {
            Label::Spam => &self.spam,
            Label::NonSpam => &self.non_spam,
        }
    }
}

/// Bernoulli naive Bayes with Laplace smoothing. All parameters are stored
/// as natural logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: PerClass<f64>,
    /// log P(feature = 1 | class), one entry per feature.
    pub log_p_true: PerClass<Vec<f64>>,
    /// log P(feature = 0 | class).
    pub log_p_false: PerClass<Vec<f64>>,
    pub alpha: f64,
    pub threshold: f64,
}

pub fn fit_naive_bayes(matrix: &FeatureMatrix, alpha: f64, threshold: f64) -> Result<NaiveBayesModel, ModelError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::BadHyperparameter(format!("alpha {alpha} must be positive")));
    }
    check_threshold(threshold)?;
    check_both_classes(matrix)?;
    if matrix.n_features() == 0 {
        return Err(ModelError::ZeroFeatures);
    }
    let n = matrix.n_rows() as f64;
    let p = matrix.n_features();
    let per_class = |label: Label| {
        let n_c = matrix.count(label) as f64;
        let mut ones = vec![0usize; p];
        for (row, _) in matrix.rows.iter().zip(&matrix.labels).filter(|(_, l)| **l == label) {
            for (count, &v) in ones.iter_mut().zip(row) {
                *count += v as usize;
            }
        }
        let denom = n_c + 2.0 * alpha;
        let log_true: Vec<f64> = ones.iter().map(|&k| ((k as f64 + alpha) / denom).ln()).collect();
        let log_false: Vec<f64> = ones
            .iter()
            .map(|&k| ((n_c - k as f64 + alpha) / denom).ln())
            .collect();
        ((n_c / n).ln(), log_true, log_false)
    };
    let (spam_prior, spam_true, spam_false) = per_class(Label::Spam);
    let (non_prior, non_true, non_false) = per_class(Label::NonSpam);
    Ok(NaiveBayesModel {
        log_prior: PerClass {
            spam: spam_prior,
            non_spam: non_prior,
        },
        log_p_true: PerClass {
            spam: spam_true,
            non_spam: non_true,
        },
        log_p_false: PerClass {
            spam: spam_false,
            non_spam: non_false,
        },
        alpha,
        threshold,
    })
}

impl NaiveBayesModel {
    /// Joint log score log P(c) + sum_j log P(x_j | c).
    pub fn joint_log_score(&self, label: Label, x: &[bool]) -> f64 {
        let t = self.log_p_true.get(label);
        let f = self.log_p_false.get(label);
        self.log_prior.get(label)
            + x.iter()
                .enumerate()
                .map(|(j, &v)| if v { t[j] } else { f[j] })
                .sum::<f64>()
    }

    pub fn posterior_spam(&self, x: &[bool]) -> Result<f64, ModelError> {
        check_dimension(self.n_features(), x)?;
        let s = self.joint_log_score(Label::Spam, x);
        let n = self.joint_log_score(Label::NonSpam, x);
        let m = s.max(n);
        let log_norm = m + ((s - m).exp() + (n - m).exp()).ln();
        Ok((s - log_norm).exp().clamp(0.0, 1.0))
    }
}

impl Classifier for NaiveBayesModel {
    fn n_features(&self) -> usize {
        self.log_p_true.spam.len()
    }

    fn predict(&self, x: &[bool]) -> Result<Prediction, ModelError> {
        let score = self.posterior_spam(x)?;
        Ok(Prediction {
            label: label_for(score, self.threshold),
            score,
        })
    }
}
