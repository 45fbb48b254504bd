//! Seeded surrogate text classifier: hashed-vocabulary embeddings, mean or
//! attention pooling, one tanh dense layer with dropout, and a two-output
//! head. The seed deterministically derives three independent randomness
//! streams — weight initialization, per-epoch example order, dropout masks —
//! and nothing else is random.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Pooling, Predictor, TrainConfig};
use crate::corpus::{AnnotatedDocument, CorpusStore, Label, Split};
use crate::error::{Error, Result};
use crate::rng::{derive_indexed_rng, derive_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    pub seed: u64,
    pub config: TrainConfig,
    /// vocab_buckets × embedding_dim, row-major.
    pub embedding: Vec<f64>,
    /// hidden_dim × embedding_dim, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// 2 × hidden_dim, row-major; output 0 is news, output 1 is opinion.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// Attention scoring vector (embedding_dim), present for attention
    /// pooling only.
    pub attn: Option<Vec<f64>>,
}

/// FNV-1a hash of the case-folded surface, reduced to a vocabulary bucket.
pub fn hash_bucket(lower: &str, buckets: usize) -> usize {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in lower.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    (h % buckets as u64) as usize
}

#[derive(Debug, Clone)]
pub(crate) struct Forward {
    pub(crate) embeds: Vec<Vec<f64>>,
    /// Softmax attention weights, one per token (uniform for mean pooling).
    pub(crate) pool_weights: Vec<f64>,
    pub(crate) pooled: Vec<f64>,
    pub(crate) hidden: Vec<f64>,
    pub(crate) hidden_dropped: Vec<f64>,
    pub(crate) logits: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}

/// Parameter-shaped gradient accumulator; same layout as the model fields.
#[derive(Debug, Clone)]
pub struct NeuralGradients {
    pub embedding: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub attn: Option<Vec<f64>>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl NeuralModel {
    pub fn model_id(&self) -> String {
        format!("neural-seed{}-{}", self.seed, self.config.digest())
    }

    pub fn token_buckets(&self, doc: &AnnotatedDocument) -> Vec<usize> {
        doc.tokens
            .iter()
            .map(|t| hash_bucket(&t.lower, self.config.vocab_buckets))
            .collect()
    }

    fn embed(&self, bucket: usize) -> &[f64] {
        let d = self.config.embedding_dim;
        &self.embedding[bucket * d..(bucket + 1) * d]
    }

    /// Full forward pass. `dropout_mask`, when given, is applied to the
    /// post-tanh hidden activations (entries are 0 or 1/(1−rate)).
    pub(crate) fn forward(&self, buckets: &[usize], dropout_mask: Option<&[f64]>) -> Forward {
        let d = self.config.embedding_dim;
        let hd = self.config.hidden_dim;
        let n = buckets.len();
        let embeds: Vec<Vec<f64>> = buckets.iter().map(|&b| self.embed(b).to_vec()).collect();

        let pool_weights = match (&self.config.pooling, &self.attn) {
            (Pooling::Mean, _) | (Pooling::Attention, None) => vec![1.0 / n as f64; n],
            (Pooling::Attention, Some(u)) => {
                let scores: Vec<f64> = embeds
                    .iter()
                    .map(|e| e.iter().zip(u).map(|(a, b)| a * b).sum())
                    .collect();
                softmax(&scores)
            }
        };
        let mut pooled = vec![0.0; d];
        for (w, e) in pool_weights.iter().zip(&embeds) {
            for k in 0..d {
                pooled[k] += w * e[k];
            }
        }

        let mut hidden = vec![0.0; hd];
        for j in 0..hd {
            let mut z = self.b1[j];
            for k in 0..d {
                z += self.w1[j * d + k] * pooled[k];
            }
            hidden[j] = z.tanh();
        }
        let hidden_dropped: Vec<f64> = match dropout_mask {
            Some(mask) => hidden.iter().zip(mask).map(|(h, m)| h * m).collect(),
            None => hidden.clone(),
        };

        let mut logits = vec![0.0; 2];
        for o in 0..2 {
            let mut z = self.b2[o];
            for j in 0..hd {
                z += self.w2[o * hd + j] * hidden_dropped[j];
            }
            logits[o] = z;
        }
        let probs = softmax(&logits);
        Forward {
            embeds,
            pool_weights,
            pooled,
            hidden,
            hidden_dropped,
            logits,
            probs,
        }
    }

    pub fn zero_gradients(&self) -> NeuralGradients {
        NeuralGradients {
            embedding: vec![0.0; self.embedding.len()],
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            attn: self.attn.as_ref().map(|a| vec![0.0; a.len()]),
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(&self.embedding);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        if let Some(a) = &self.attn {
            v.extend_from_slice(a);
        }
        v
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut i = 0;
        for dst in [
            &mut self.embedding,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ] {
            let len = dst.len();
            dst.copy_from_slice(&flat[i..i + len]);
            i += len;
        }
        if let Some(a) = &mut self.attn {
            let len = a.len();
            a.copy_from_slice(&flat[i..i + len]);
        }
    }

    pub fn has_finite_params(&self) -> bool {
        self.params_flat().iter().all(|v| v.is_finite())
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self).map_err(|e| Error::Model(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&json).map_err(|e| Error::Model(e.to_string()))
    }
}

impl NeuralGradients {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(&self.embedding);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        if let Some(a) = &self.attn {
            v.extend_from_slice(a);
        }
        v
    }
}

/// Mean cross-entropy loss (and its analytic gradients) over a batch of
/// (bucket-sequence, target) examples, with one fixed dropout mask per
/// example when supplied. Pure: the same inputs always produce the same
/// outputs, which is what makes gradient checking possible.
pub fn loss_and_grad(
    model: &NeuralModel,
    examples: &[(Vec<usize>, usize)],
    masks: Option<&[Vec<f64>]>,
) -> (f64, NeuralGradients) {
    let d = model.config.embedding_dim;
    let hd = model.config.hidden_dim;
    let scale = 1.0 / examples.len() as f64;
    let mut grads = model.zero_gradients();
    let mut loss = 0.0;

    for (idx, (buckets, target)) in examples.iter().enumerate() {
        let mask = masks.map(|m| m[idx].as_slice());
        let f = model.forward(buckets, mask);
        loss -= scale * f.probs[*target].max(1e-300).ln();

        // d loss / d logits.
        let mut dlogits = f.probs.clone();
        dlogits[*target] -= 1.0;
        for v in &mut dlogits {
            *v *= scale;
        }

        let mut dh_dropped = vec![0.0; hd];
        for o in 0..2 {
            grads.b2[o] += dlogits[o];
            for j in 0..hd {
                grads.w2[o * hd + j] += dlogits[o] * f.hidden_dropped[j];
                dh_dropped[j] += model.w2[o * hd + j] * dlogits[o];
            }
        }
        let mut dh_pre = vec![0.0; hd];
        for j in 0..hd {
            let dh = match mask {
                Some(m) => dh_dropped[j] * m[j],
                None => dh_dropped[j],
            };
            dh_pre[j] = dh * (1.0 - f.hidden[j] * f.hidden[j]);
        }
        let mut dpooled = vec![0.0; d];
        for j in 0..hd {
            grads.b1[j] += dh_pre[j];
            for k in 0..d {
                grads.w1[j * d + k] += dh_pre[j] * f.pooled[k];
                dpooled[k] += model.w1[j * d + k] * dh_pre[j];
            }
        }

        match (&model.config.pooling, &model.attn) {
            (Pooling::Mean, _) | (Pooling::Attention, None) => {
                let n = buckets.len() as f64;
                for &b in buckets {
                    for k in 0..d {
                        grads.embedding[b * d + k] += dpooled[k] / n;
                    }
                }
            }
            (Pooling::Attention, Some(u)) => {
                let alphas = &f.pool_weights;
                let dalpha: Vec<f64> = f
                    .embeds
                    .iter()
                    .map(|e| e.iter().zip(&dpooled).map(|(a, b)| a * b).sum())
                    .collect();
                let mean_dalpha: f64 = alphas.iter().zip(&dalpha).map(|(a, g)| a * g).sum();
                let dscore: Vec<f64> = alphas
                    .iter()
                    .zip(&dalpha)
                    .map(|(a, g)| a * (g - mean_dalpha))
                    .collect();
                let gattn = grads.attn.as_mut().expect("attention gradients");
                for (i, &b) in buckets.iter().enumerate() {
                    for k in 0..d {
                        grads.embedding[b * d + k] +=
                            alphas[i] * dpooled[k] + dscore[i] * u[k];
                        gattn[k] += dscore[i] * f.embeds[i][k];
                    }
                }
            }
        }
    }
    (loss, grads)
}

fn init_model(seed: u64, config: &TrainConfig) -> NeuralModel {
    let mut rng = derive_rng(seed, "init");
    let d = config.embedding_dim;
    let hd = config.hidden_dim;
    let mut uniform = |n: usize, s: f64| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-s..s)).collect()
    };
    let embedding = uniform(config.vocab_buckets * d, 0.1);
    let w1 = uniform(hd * d, 1.0 / (d as f64).sqrt());
    let w2 = uniform(2 * hd, 1.0 / (hd as f64).sqrt());
    let attn = match config.pooling {
        Pooling::Attention => Some(uniform(d, 1.0 / (d as f64).sqrt())),
        Pooling::Mean => None,
    };
    NeuralModel {
        seed,
        config: config.clone(),
        embedding,
        w1,
        b1: vec![0.0; hd],
        w2,
        b2: vec![0.0; 2],
        attn,
    }
}

fn target_index(label: Label) -> usize {
    match label {
        Label::News => 0,
        Label::Opinion => 1,
    }
}

/// Mini-batch gradient descent on the train split for the configured number
/// of epochs. Internally single-threaded so floating-point reduction order
/// is fixed; dropout is active only here, never at inference.
pub fn train_neural(corpus: &CorpusStore, seed: u64, config: &TrainConfig) -> Result<NeuralModel> {
    config.validate()?;
    let train_docs = corpus.split_docs(Split::Train)?;
    if train_docs.is_empty() {
        return Err(Error::Data("train split is empty".into()));
    }

    let mut model = init_model(seed, config);
    let examples: Vec<(Vec<usize>, usize)> = train_docs
        .iter()
        .map(|doc| (model.token_buckets(doc), target_index(doc.label)))
        .collect();

    let mut dropout_rng = derive_rng(seed, "dropout");
    let hd = config.hidden_dim;
    let keep = 1.0 - config.dropout;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        {
            use rand::seq::SliceRandom;
            let mut shuffle_rng = derive_indexed_rng(seed, "shuffle", epoch as u64);
            order.shuffle(&mut shuffle_rng);
        }
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let batch_examples: Vec<(Vec<usize>, usize)> =
                batch.iter().map(|&i| examples[i].clone()).collect();
            let masks: Option<Vec<Vec<f64>>> = if config.dropout > 0.0 {
                Some(
                    batch
                        .iter()
                        .map(|_| {
                            (0..hd)
                                .map(|_| {
                                    if dropout_rng.random_bool(keep) {
                                        1.0 / keep
                                    } else {
                                        0.0
                                    }
                                })
                                .collect()
                        })
                        .collect(),
                )
            } else {
                None
            };
            let (loss, grads) = loss_and_grad(&model, &batch_examples, masks.as_deref());
            if !loss.is_finite() {
                return Err(Error::numeric(
                    format!("train_neural/epoch{epoch}/batch{batch_no}"),
                    format!("loss diverged ({loss})"),
                ));
            }
            let lr = config.learning_rate;
            for (p, g) in model.embedding.iter_mut().zip(&grads.embedding) {
                *p -= lr * g;
            }
            for (p, g) in model.w1.iter_mut().zip(&grads.w1) {
                *p -= lr * g;
            }
            for (p, g) in model.b1.iter_mut().zip(&grads.b1) {
                *p -= lr * g;
            }
            for (p, g) in model.w2.iter_mut().zip(&grads.w2) {
                *p -= lr * g;
            }
            for (p, g) in model.b2.iter_mut().zip(&grads.b2) {
                *p -= lr * g;
            }
            if let (Some(a), Some(ga)) = (&mut model.attn, &grads.attn) {
                for (p, g) in a.iter_mut().zip(ga) {
                    *p -= lr * g;
                }
            }
        }
    }
    Ok(model)
}

impl Predictor for NeuralModel {
    fn model_id(&self) -> String {
        NeuralModel::model_id(self)
    }

    fn predict_doc(&self, doc: &AnnotatedDocument) -> Result<(Label, (f64, f64))> {
        if !self.has_finite_params() {
            return Err(Error::Model("model has non-finite parameters".into()));
        }
        let f = self.forward(&self.token_buckets(doc), None);
        let (p_news, p_opinion) = (f.probs[0], f.probs[1]);
        let label = if p_opinion > p_news {
            Label::Opinion
        } else {
            Label::News
        };
        Ok((label, (p_opinion, p_news)))
    }
}
