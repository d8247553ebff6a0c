//! In-memory session store. Ids are per resource type, start at 1 and are
//! never reused. A model's feature set and corpora cannot be deleted while
//! the model exists.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spamlab_core::evalkit::{score, MetricsReport};
use spamlab_core::{Corpus, FeatureSet, TextClassifier, TrainedModel};

use crate::error::ApiError;

#[derive(Debug, Clone)]
pub struct StoredModel {
    pub model: TrainedModel,
    pub feature_set: Option<u64>,
    pub train_corpus: u64,
    pub test_corpus: Option<u64>,
    pub train_metrics: MetricsReport,
    pub test_metrics: Option<MetricsReport>,
}

impl StoredModel {
    /// Scores `model` on its corpora.
    pub fn evaluate(
        model: TrainedModel,
        feature_set: Option<u64>,
        (train_id, train): (u64, &Corpus),
        test: Option<(u64, &Corpus)>,
    ) -> Result<StoredModel, ApiError> {
        let measure = |c: &Corpus| -> Result<MetricsReport, ApiError> {
            Ok(score(&model.classify_corpus(c)?, &c.labels())?)
        };
        let train_metrics = measure(train)?;
        let test_metrics = test.map(|(_, c)| measure(c)).transpose()?;
        Ok(StoredModel {
            feature_set,
            train_corpus: train_id,
            test_corpus: test.map(|(id, _)| id),
            train_metrics,
            test_metrics,
            model,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextIds {
    pub corpus: u64,
    pub feature_set: u64,
    pub model: u64,
}

impl Default for NextIds {
    fn default() -> Self {
        NextIds {
            corpus: 1,
            feature_set: 1,
            model: 1,
        }
    }
}

#[derive(Debug, Default)]
pub struct Store {
    corpora: BTreeMap<u64, Arc<Corpus>>,
    feature_sets: BTreeMap<u64, Arc<FeatureSet>>,
    models: BTreeMap<u64, Arc<StoredModel>>,
    next: NextIds,
}

fn take_id(counter: &mut u64) -> u64 {
    let id = *counter;
    *counter += 1;
    id
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn add_corpus(&mut self, corpus: Corpus) -> u64 {
        let id = take_id(&mut self.next.corpus);
        self.corpora.insert(id, Arc::new(corpus));
        id
    }

    pub fn corpus(&self, id: u64) -> Result<Arc<Corpus>, ApiError> {
        self.corpora
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_corpus", id))
    }

    pub fn corpora(&self) -> impl Iterator<Item = (u64, &Arc<Corpus>)> {
        self.corpora.iter().map(|(id, c)| (*id, c))
    }

    pub fn add_feature_set(&mut self, features: FeatureSet) -> u64 {
        let id = take_id(&mut self.next.feature_set);
        self.feature_sets.insert(id, Arc::new(features));
        id
    }

    pub fn feature_set(&self, id: u64) -> Result<Arc<FeatureSet>, ApiError> {
        self.feature_sets
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_feature_set", id))
    }

    pub fn feature_sets(&self) -> impl Iterator<Item = (u64, &Arc<FeatureSet>)> {
        self.feature_sets.iter().map(|(id, f)| (*id, f))
    }

    /// Stores a trained model after re-checking that everything it refers
    /// to still exists.
    pub fn add_model(&mut self, model: StoredModel) -> Result<u64, ApiError> {
        if let Some(fs) = model.feature_set {
            self.feature_set(fs)?;
        }
        self.corpus(model.train_corpus)?;
        if let Some(test) = model.test_corpus {
            self.corpus(test)?;
        }
        let id = take_id(&mut self.next.model);
        self.models.insert(id, Arc::new(model));
        Ok(id)
    }

    pub fn model(&self, id: u64) -> Result<Arc<StoredModel>, ApiError> {
        self.models
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_model", id))
    }

    pub fn models(&self) -> impl Iterator<Item = (u64, &Arc<StoredModel>)> {
        self.models.iter().map(|(id, m)| (*id, m))
    }

    fn models_using(&self, pred: impl Fn(&StoredModel) -> bool) -> Vec<u64> {
        self.models
            .iter()
            .filter(|(_, m)| pred(m))
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn remove_corpus(&mut self, id: u64) -> Result<(), ApiError> {
        self.corpus(id)?;
        let users = self.models_using(|m| m.train_corpus == id || m.test_corpus == Some(id));
        if !users.is_empty() {
            return Err(ApiError::conflict(format!("corpus {id} is used by models {users:?}")));
        }
        self.corpora.remove(&id);
        Ok(())
    }

    pub fn remove_feature_set(&mut self, id: u64) -> Result<(), ApiError> {
        self.feature_set(id)?;
        let users = self.models_using(|m| m.feature_set == Some(id));
        if !users.is_empty() {
            return Err(ApiError::conflict(format!("feature set {id} is used by models {users:?}")));
        }
        self.feature_sets.remove(&id);
        Ok(())
    }

    pub fn remove_model(&mut self, id: u64) -> Result<(), ApiError> {
        self.models
            .remove(&id)
            .map(|_| ())
            .ok_or_else(|| ApiError::not_found("unknown_model", id))
    }

    /// Checks that no model refers to a missing resource and that no id is
    /// at or beyond its counter.
    pub fn check_consistency(&self) -> Result<(), String> {
        let below = |ids: Vec<u64>, next: u64, what: &str| match ids.iter().find(|&&id| id == 0 || id >= next) {
            Some(id) => Err(format!("{what} id {id} outside 1..{next}")),
            None => Ok(()),
        };
        below(self.corpora.keys().copied().collect(), self.next.corpus, "corpus")?;
        below(self.feature_sets.keys().copied().collect(), self.next.feature_set, "feature set")?;
        below(self.models.keys().copied().collect(), self.next.model, "model")?;
        for (id, m) in &self.models {
            let refs_ok = m.feature_set.is_none_or(|f| self.feature_sets.contains_key(&f))
                && self.corpora.contains_key(&m.train_corpus)
                && m.test_corpus.is_none_or(|t| self.corpora.contains_key(&t));
            if !refs_ok {
                return Err(format!("model {id} has a dangling reference"));
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format_version: SNAPSHOT_VERSION,
            next: self.next,
            corpora: self
                .corpora
                .iter()
                .map(|(id, c)| SavedCorpus {
                    id: *id,
                    name: c.name().to_string(),
                    csv: c.to_csv_string(),
                })
                .collect(),
            feature_sets: self
                .feature_sets
                .iter()
                .map(|(id, f)| SavedFeatureSet {
                    id: *id,
                    features: (**f).clone(),
                })
                .collect(),
            models: self
                .models
                .iter()
                .map(|(id, m)| SavedModel {
                    id: *id,
                    feature_set: m.feature_set,
                    train_corpus: m.train_corpus,
                    test_corpus: m.test_corpus,
                    model: serde_json::from_str(&m.model.to_json()).expect("model JSON is valid"),
                })
                .collect(),
        }
    }

    /// Rebuilds a store from a snapshot; metrics are recomputed.
    pub fn restore(snapshot: Snapshot) -> Result<Store, String> {
        if snapshot.format_version != SNAPSHOT_VERSION {
            return Err(format!("unsupported snapshot version {}", snapshot.format_version));
        }
        let mut store = Store {
            next: snapshot.next,
            ..Store::default()
        };
        for c in snapshot.corpora {
            let corpus = Corpus::from_csv_str(c.name, &c.csv).map_err(|e| format!("corpus {}: {e}", c.id))?;
            store.corpora.insert(c.id, Arc::new(corpus));
        }
        for f in snapshot.feature_sets {
            store.feature_sets.insert(f.id, Arc::new(f.features));
        }
        for m in snapshot.models {
            let model = TrainedModel::from_json(&m.model.to_string()).map_err(|e| format!("model {}: {e}", m.id))?;
            let train = store.corpus(m.train_corpus).map_err(|e| e.message)?;
            let test = match m.test_corpus {
                Some(t) => Some((t, store.corpus(t).map_err(|e| e.message)?)),
                None => None,
            };
            let stored = StoredModel::evaluate(
                model,
                m.feature_set,
                (m.train_corpus, &train),
                test.as_ref().map(|(id, c)| (*id, &**c)),
            )
            .map_err(|e| format!("model {}: {}", m.id, e.message))?;
            store.models.insert(m.id, Arc::new(stored));
        }
        store.check_consistency()?;
        Ok(store)
    }
}

pub const SNAPSHOT_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u64,
    pub next: NextIds,
    pub corpora: Vec<SavedCorpus>,
    pub feature_sets: Vec<SavedFeatureSet>,
    pub models: Vec<SavedModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedCorpus {
    pub id: u64,
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedFeatureSet {
    pub id: u64,
    pub features: FeatureSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub id: u64,
    pub feature_set: Option<u64>,
    pub train_corpus: u64,
    pub test_corpus: Option<u64>,
    pub model: Value,
}
