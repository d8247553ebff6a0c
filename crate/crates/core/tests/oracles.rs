//! Model internals checked against independent reference computations.

use num_rational::Ratio;
use proptest::prelude::*;
use spamlab_core::classifiers::{
    fit_forest, fit_logistic, fit_naive_bayes, induce_tree, nll_gradient, penalized_nll, Classifier, ForestConfig,
    LogisticConfig, TreeConfig,
};
use spamlab_core::textfeat::{build_vocabulary, presets};
use spamlab_core::{Corpus, FeatureMatrix, FeatureSet, Label};

const SAMPLE10: &str = include_str!("../../../fixtures/sample10.csv");
const VOCAB_WORDS: &str = include_str!("../../../fixtures/vocab_words.csv");

fn label(b: bool) -> Label {
    if b { Label::Spam } else { Label::NonSpam }
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

/// Random binary matrices with n rows and p columns.
fn matrix(max_n: usize, max_p: usize) -> impl Strategy<Value = FeatureMatrix> {
    (1..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(prop::collection::vec(any::<bool>(), p), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(rows, labels)| FeatureMatrix::new(names(p), rows, labels.into_iter().map(label).collect()))
    })
}

fn two_class(max_n: usize, max_p: usize) -> impl Strategy<Value = FeatureMatrix> {
    matrix(max_n, max_p).prop_filter("both classes", |m| m.count(Label::Spam) > 0 && m.count(Label::NonSpam) > 0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn logistic_gradient_matches_central_differences(
        m in matrix(20, 5),
        raw in prop::collection::vec(-3.0f64..3.0, 6),
        lambda in prop::sample::select(vec![1e-4, 1e-2, 1.0]),
    ) {
        let p = m.n_features();
        let (w, b) = (raw[..p].to_vec(), raw[5]);
        let (gw, gb) = nll_gradient(&w, b, &m, lambda);
        let analytic: Vec<f64> = std::iter::once(gb).chain(gw).collect();

        let h = 1e-5;
        let f = |w: &[f64], b: f64| penalized_nll(w, b, &m, lambda);
        let mut numeric = vec![(f(&w, b + h) - f(&w, b - h)) / (2.0 * h)];
        for j in 0..p {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            numeric.push((f(&up, b) - f(&down, b)) / (2.0 * h));
        }
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        prop_assume!(scale > 1e-6);
        prop_assert!(norm(&diff) / scale < 1e-6, "{analytic:?} vs {numeric:?}");
    }

    #[test]
    fn logistic_objective_never_increases(m in two_class(20, 5)) {
        let fit = fit_logistic(&m, &LogisticConfig::default()).unwrap();
        prop_assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", fit.trace);
        prop_assert!(fit.model.converged, "{} iterations", fit.model.iterations);
        prop_assert!(fit.model.iterations <= 200);
    }

    #[test]
    fn naive_bayes_matches_enumeration(m in two_class(30, 4), alpha in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let model = fit_naive_bayes(&m, alpha, 0.5).unwrap();
        let p = m.n_features();
        let n = m.n_rows() as f64;

        // Plain-probability parameters straight from the counts.
        let params = |c: Label| {
            let rows: Vec<&Vec<bool>> = m.rows.iter().zip(&m.labels).filter(|(_, l)| **l == c).map(|(r, _)| r).collect();
            let n_c = rows.len() as f64;
            let theta: Vec<f64> = (0..p)
                .map(|j| (rows.iter().filter(|r| r[j]).count() as f64 + alpha) / (n_c + 2.0 * alpha))
                .collect();
            (n_c / n, theta)
        };
        let (prior_s, theta_s) = params(Label::Spam);
        let (prior_n, theta_n) = params(Label::NonSpam);
        let joint = |prior: f64, theta: &[f64], x: &[bool]| {
            prior * x.iter().zip(theta).map(|(&v, &t)| if v { t } else { 1.0 - t }).product::<f64>()
        };

        let mut mass = 0.0;
        for code in 0u32..(1 << p) {
            let x: Vec<bool> = (0..p).map(|j| code >> j & 1 == 1).collect();
            let s = joint(prior_s, &theta_s, &x);
            let ns = joint(prior_n, &theta_n, &x);
            mass += s + ns;
            let expected = s / (s + ns);
            let got = model.posterior_spam(&x).unwrap();
            prop_assert!((got - expected).abs() < 1e-12, "x={x:?}: {got} vs {expected}");
            prop_assert_eq!(model.predict(&x).unwrap().label, label(expected > 0.5));
        }
        prop_assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_root_is_the_exhaustive_gini_argmax(m in matrix(30, 6)) {
        let config = TreeConfig { max_depth: 1, min_leaf: 1, ..TreeConfig::default() };
        let tree = induce_tree(&m, &config).unwrap();
        prop_assert_eq!(tree.root.root_feature(), gini_argmax(&m));
    }

    #[test]
    fn degenerate_forest_equals_single_tree(m in matrix(30, 6), seed in any::<u64>()) {
        let tree = TreeConfig::default();
        let config = ForestConfig { n_trees: 1, mtry: Some(m.n_features()), bootstrap: false, seed, tree };
        let forest = fit_forest(&m, &config).unwrap();
        prop_assert_eq!(&forest.trees[0], &induce_tree(&m, &tree).unwrap().root);
    }

    #[test]
    fn forests_are_reproducible(m in two_class(30, 6), seed in any::<u64>()) {
        let config = ForestConfig { n_trees: 15, seed, ..ForestConfig::default() };
        let a = serde_json::to_string(&fit_forest(&m, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&fit_forest(&m, &config).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn raising_the_threshold_never_adds_spam(m in two_class(20, 4), lo in 0.05f64..0.5, hi in 0.5f64..0.95) {
        let low = fit_logistic(&m, &LogisticConfig { threshold: lo, ..Default::default() }).unwrap().model;
        let high = fit_logistic(&m, &LogisticConfig { threshold: hi, ..Default::default() }).unwrap().model;
        let nb_low = fit_naive_bayes(&m, 1.0, lo).unwrap();
        let nb_high = fit_naive_bayes(&m, 1.0, hi).unwrap();
        for row in &m.rows {
            if high.predict(row).unwrap().label == Label::Spam {
                prop_assert_eq!(low.predict(row).unwrap().label, Label::Spam);
            }
            if nb_high.predict(row).unwrap().label == Label::Spam {
                prop_assert_eq!(nb_low.predict(row).unwrap().label, Label::Spam);
            }
        }
    }
}

/// Gini impurity 1 - p^2 - q^2 as an exact fraction.
fn gini(spam: i64, non: i64) -> Ratio<i64> {
    let n = spam + non;
    if n == 0 {
        return Ratio::from_integer(0);
    }
    Ratio::from_integer(1) - Ratio::new(spam * spam + non * non, n * n)
}

/// The feature whose split yields the largest strictly positive Gini
/// decrease, the lowest index among equals, or `None` for no useful split.
fn gini_argmax(m: &FeatureMatrix) -> Option<usize> {
    let n = m.n_rows() as i64;
    let spam = m.count(Label::Spam) as i64;
    let parent = gini(spam, n - spam);
    let mut best: Option<(usize, Ratio<i64>)> = None;
    for j in 0..m.n_features() {
        let mut c = [[0i64; 2]; 2];
        for (row, l) in m.rows.iter().zip(&m.labels) {
            c[row[j] as usize][l.is_spam() as usize] += 1;
        }
        let (n0, n1) = (c[0][0] + c[0][1], c[1][0] + c[1][1]);
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let decrease = parent - Ratio::new(n0, n) * gini(c[0][1], c[0][0]) - Ratio::new(n1, n) * gini(c[1][1], c[1][0]);
        if decrease > Ratio::from_integer(0) && best.is_none_or(|(_, d)| decrease > d) {
            best = Some((j, decrease));
        }
    }
    best.map(|(j, _)| j)
}

#[test]
fn gini_oracle_on_a_hand_computed_fixture() {
    // f0 isolates 3 of 4 spam; f1 is nearly independent of the label.
    let rows = vec![
        vec![true, true],
        vec![true, false],
        vec![true, true],
        vec![false, false],
        vec![false, true],
        vec![false, false],
        vec![false, true],
        vec![false, false],
    ];
    let labels = [true, true, true, true, false, false, false, false].map(label).to_vec();
    let m = FeatureMatrix::new(names(2), rows, labels);
    assert_eq!(gini_argmax(&m), Some(0));
    let tree = induce_tree(&m, &TreeConfig { max_depth: 1, min_leaf: 1, ..TreeConfig::default() }).unwrap();
    assert_eq!(tree.root.root_feature(), Some(0));
}

#[test]
fn logistic_converges_on_bundled_corpus() {
    let corpus = Corpus::from_csv_str("sample10", SAMPLE10).unwrap();
    for features in [presets::standard(), FeatureSet::new(presets::shiny()).unwrap()] {
        let fit = fit_logistic(&features.featurize(&corpus), &LogisticConfig::default()).unwrap();
        assert!(fit.model.converged);
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn vocabulary_keeps_words_in_four_or_more_lines() {
    let corpus = Corpus::from_csv_str("vocab", VOCAB_WORDS).unwrap();
    let vocab = build_vocabulary(&corpus, 4).unwrap();
    let mut words = vocab.words();
    words.sort_unstable();
    assert_eq!(words, ["account", "dear", "notification", "re", "urgent"]);

    let expanded = FeatureSet::new(vec![]).unwrap().with_bag_of_words(&vocab);
    assert_eq!(expanded.len(), 5);
}

#[test]
fn vocabulary_threshold_boundary() {
    let mut csv = String::from("subject,label\n");
    for i in 0..4 {
        let extra = if i < 3 { " alpha" } else { "" };
        csv.push_str(&format!("beta{extra} line{i},spam\n"));
    }
    let corpus = Corpus::from_csv_str("edge", &csv).unwrap();
    assert_eq!(build_vocabulary(&corpus, 4).unwrap().words(), ["beta"]);
    assert_eq!(build_vocabulary(&corpus, 3).unwrap().words(), ["beta", "alpha"]);
}

#[test]
fn bundled_feature_files_match_presets() {
    let two_split = FeatureSet::from_json(include_str!("../../../fixtures/two_split_features.json")).unwrap();
    assert_eq!(two_split, FeatureSet::new(vec![presets::dear_or_bless(), presets::contains_re()]).unwrap());
    let shiny = FeatureSet::from_json(include_str!("../../../fixtures/shiny_features.json")).unwrap();
    assert_eq!(shiny, FeatureSet::new(presets::shiny()).unwrap());
}
