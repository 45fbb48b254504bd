//! Classifiers: the deterministic feature-based logistic regression, the
//! seeded stochastic surrogate network, and ensembles trained across seeds.

mod logreg;
mod neural;

pub use logreg::{grid_search_logreg, train_logreg, LogRegModel, LogRegPredictor};
pub use neural::{hash_bucket, loss_and_grad, train_neural, NeuralGradients, NeuralModel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, CorpusStore, Label, Split};
use crate::error::{Error, Result};

/// Pooling applied over token embeddings in the surrogate network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
    Attention,
}

/// Hyperparameters shared by both model families. The defaults are the
/// surrogate's desk-scale values; a transformer fine-tuning setup would use
/// learning rate 2e-5, batch 4, 2 epochs instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Dropout rate on the hidden activations; disabled at inference.
    pub dropout: f64,
    /// L2 regularization strength (logistic regression).
    pub l2: f64,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub vocab_buckets: usize,
    pub pooling: Pooling,
    /// Newton iteration cap for the logistic regression.
    pub logreg_max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.3,
            batch_size: 8,
            epochs: 80,
            dropout: 0.1,
            l2: 1e-3,
            embedding_dim: 32,
            hidden_dim: 16,
            vocab_buckets: 4096,
            pooling: Pooling::Mean,
            logreg_max_iter: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.l2 <= 0.0 || !self.l2.is_finite() {
            return Err(Error::Config("l2 must be positive".into()));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("embedding_dim", self.embedding_dim),
            ("hidden_dim", self.hidden_dim),
            ("vocab_buckets", self.vocab_buckets),
            ("logreg_max_iter", self.logreg_max_iter),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Stable digest of the configuration, stored in trained models.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Anything that predicts a label (and a score pair) for a document.
pub trait Predictor: Sync {
    fn model_id(&self) -> String;

    /// Returns the predicted label and the (opinion, news) score pair.
    /// Ties break to news.
    fn predict_doc(&self, doc: &AnnotatedDocument) -> Result<(Label, (f64, f64))>;
}

/// Fraction of documents whose predicted label matches the gold label.
pub fn accuracy(model: &dyn Predictor, docs: &[&AnnotatedDocument]) -> Result<f64> {
    if docs.is_empty() {
        return Err(Error::Data("accuracy over an empty document set".into()));
    }
    let mut correct = 0usize;
    for doc in docs {
        let (label, _) = model.predict_doc(doc)?;
        if label == doc.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / docs.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub seed: u64,
    pub model: NeuralModel,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

/// Surrogate models trained on identical data and config, one per seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<EnsembleMember>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn test_accuracies(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.test_accuracy).collect()
    }
}

/// Train one model per seed on the same splits. Members are returned in
/// seed order regardless of the parallel execution schedule.
pub fn train_ensemble(
    corpus: &CorpusStore,
    seeds: &[u64],
    config: &TrainConfig,
) -> Result<Ensemble> {
    let mut seen = std::collections::HashSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(Error::Config(format!("duplicate seed {s}")));
        }
    }
    let val_docs = corpus.split_docs(Split::Validation)?;
    let test_docs = corpus.split_docs(Split::Test)?;
    let members: Result<Vec<EnsembleMember>> = seeds
        .par_iter()
        .map(|&seed| {
            let model = train_neural(corpus, seed, config)?;
            let validation_accuracy = accuracy(&model, &val_docs)?;
            let test_accuracy = accuracy(&model, &test_docs)?;
            Ok(EnsembleMember {
                seed,
                model,
                validation_accuracy,
                test_accuracy,
            })
        })
        .collect();
    Ok(Ensemble { members: members? })
}
