//! Attention-driven feature enrichment: rank tokens by the average
//! attention a model gives them, keep the tokens that stay highly ranked
//! across many models, and measure whether a feature registry extended with
//! that evidence beats the baseline.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, CorpusStore, Label, Split};
use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::features::{extract_features, FeatureRegistry, LexiconSet};
use crate::models::{accuracy, train_logreg, LogRegModel, LogRegPredictor, TrainConfig};
use crate::stats::{z_statistic, Z_CRITICAL};

/// Minimum occurrences for a token to be ranked.
pub const DEFAULT_MIN_COUNT: usize = 10;
/// Ranking depth consulted per model when looking for stable tokens.
pub const DEFAULT_TOP_K: usize = 100;
/// Minimum number of models whose top-k must contain a stable token.
pub const DEFAULT_MIN_MODELS: usize = 5;
/// Tokens kept per class in the final lists.
pub const DEFAULT_PER_CLASS: usize = 50;
/// Cap on how many equivalent models feed the ranking stage.
pub const DEFAULT_EQUIVALENT_MODELS: usize = 10;

/// One ranked token: case-folded form, mean attention across its
/// occurrences, and how many occurrences that mean covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedToken {
    pub token: String,
    pub mean_attention: f64,
    pub count: usize,
}

/// Per-class ranking of tokens by mean attention for one model's
/// explanation set, descending, ties alphabetical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenAttentionRanking {
    pub label: Label,
    pub entries: Vec<RankedToken>,
}

/// A token retained by the cross-model stability filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableToken {
    pub token: String,
    /// Number of models whose top-k ranking contains the token.
    pub supporting_models: usize,
    /// Mean over the supporting models' mean attentions.
    pub mean_of_means: f64,
}

/// Rank tokens by average attention, one ranking per class of the explained
/// prediction. Tokens are aggregated case-folded across the whole map set
/// and must occur at least `min_count` times within their class.
pub fn rank_tokens(
    explanations: &[Explanation],
    corpus: &CorpusStore,
    min_count: usize,
) -> Result<Vec<TokenAttentionRanking>> {
    if explanations.is_empty() {
        return Err(Error::Data("token ranking over an empty map set".into()));
    }
    let mut per_class: HashMap<Label, HashMap<String, (f64, usize)>> = HashMap::new();
    for e in explanations {
        let doc = corpus.get(&e.doc_id).ok_or_else(|| {
            Error::Contract(format!("explanation references unknown document {:?}", e.doc_id))
        })?;
        if doc.len() != e.relevances.len() {
            return Err(Error::Contract(format!(
                "document {:?} has {} tokens but the explanation {} relevances",
                e.doc_id,
                doc.len(),
                e.relevances.len()
            )));
        }
        let bucket = per_class.entry(e.predicted).or_default();
        for (token, &attention) in doc.tokens.iter().zip(&e.relevances) {
            let (sum, count) = bucket.entry(token.lower.clone()).or_insert((0.0, 0));
            *sum += attention;
            *count += 1;
        }
    }
    let mut rankings = Vec::new();
    for label in [Label::News, Label::Opinion] {
        let mut entries: Vec<RankedToken> = per_class
            .remove(&label)
            .unwrap_or_default()
            .into_iter()
            .filter(|(_, (_, count))| *count >= min_count)
            .map(|(token, (sum, count))| RankedToken {
                token,
                mean_attention: sum / count as f64,
                count,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.mean_attention
                .partial_cmp(&a.mean_attention)
                .expect("finite attention")
                .then_with(|| a.token.cmp(&b.token))
        });
        rankings.push(TokenAttentionRanking { label, entries });
    }
    Ok(rankings)
}

/// Tokens present in the top-k of at least `min_models` of the supplied
/// per-model rankings (all for the same class). Ordered by supporting-model
/// count, ties by mean of mean-attentions, then alphabetically.
pub fn stable_top_tokens(
    rankings: &[TokenAttentionRanking],
    top_k: usize,
    min_models: usize,
) -> Result<Vec<StableToken>> {
    if min_models == 0 || min_models > rankings.len() {
        return Err(Error::Config(format!(
            "min_models {} out of range for {} rankings",
            min_models,
            rankings.len()
        )));
    }
    let label = rankings[0].label;
    if rankings.iter().any(|r| r.label != label) {
        return Err(Error::Contract(
            "stable-token rankings mix class labels".into(),
        ));
    }
    let mut support: HashMap<&str, (usize, f64)> = HashMap::new();
    for ranking in rankings {
        for entry in ranking.entries.iter().take(top_k) {
            let (models, sum) = support.entry(&entry.token).or_insert((0, 0.0));
            *models += 1;
            *sum += entry.mean_attention;
        }
    }
    let mut out: Vec<StableToken> = support
        .into_iter()
        .filter(|(_, (models, _))| *models >= min_models)
        .map(|(token, (models, sum))| StableToken {
            token: token.to_string(),
            supporting_models: models,
            mean_of_means: sum / models as f64,
        })
        .collect();
    out.sort_by(|a, b| {
        b.supporting_models
            .cmp(&a.supporting_models)
            .then_with(|| {
                b.mean_of_means
                    .partial_cmp(&a.mean_of_means)
                    .expect("finite attention")
            })
            .then_with(|| a.token.cmp(&b.token))
    });
    Ok(out)
}

/// Truncate each class's stable list to `per_class` entries; shorter lists
/// pass through.
pub fn class_token_lists(
    news: &[StableToken],
    opinion: &[StableToken],
    per_class: usize,
) -> (Vec<StableToken>, Vec<StableToken>) {
    let cut = |list: &[StableToken]| list.iter().take(per_class).cloned().collect();
    (cut(news), cut(opinion))
}

/// Two-column CSV of a stable-token list.
pub fn stable_tokens_csv(tokens: &[StableToken]) -> String {
    let mut out = String::from("token,supporting_model_count\n");
    for t in tokens {
        out.push_str(&format!("{},{}\n", t.token, t.supporting_models));
    }
    out
}

/// Accuracy comparison on one named test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestSetComparison {
    pub name: String,
    pub baseline_accuracy: f64,
    pub enriched_accuracy: f64,
    pub z: f64,
    pub p: f64,
    /// True iff z > 1.96.
    pub significant: bool,
}

/// Baseline vs enriched feature models trained on identical data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub baseline_model: LogRegModel,
    pub enriched_model: LogRegModel,
    pub comparisons: Vec<TestSetComparison>,
}

/// Train a baseline-registry and an enriched-registry logistic model on the
/// same train split, then compare their accuracies per test set with the
/// pooled-proportion z test (n = that test set's size).
pub fn enrich_and_compare(
    corpus: &CorpusStore,
    base_registry: &FeatureRegistry,
    enriched_registry: &FeatureRegistry,
    lexicons: &LexiconSet,
    test_sets: &[(String, Vec<&AnnotatedDocument>)],
    config: &TrainConfig,
) -> Result<EnrichmentReport> {
    let train_docs = corpus.split_docs(Split::Train)?;
    let labels: Vec<Label> = train_docs.iter().map(|d| d.label).collect();
    let train = |registry: &FeatureRegistry| -> Result<LogRegModel> {
        let features = train_docs
            .iter()
            .map(|d| extract_features(d, registry, lexicons))
            .collect::<Result<Vec<_>>>()?;
        train_logreg(&features, &labels, config)
    };
    let baseline_model = train(base_registry)?;
    let enriched_model = train(enriched_registry)?;

    let mut comparisons = Vec::with_capacity(test_sets.len());
    for (name, docs) in test_sets {
        let baseline_accuracy = accuracy(
            &LogRegPredictor { model: &baseline_model, registry: base_registry, lexicons },
            docs,
        )?;
        let enriched_accuracy = accuracy(
            &LogRegPredictor { model: &enriched_model, registry: enriched_registry, lexicons },
            docs,
        )?;
        // Equal accuracies are trivially non-significant, even where the
        // pooled variance would degenerate.
        let (z, p) = if enriched_accuracy == baseline_accuracy {
            (0.0, 0.5)
        } else {
            z_statistic(enriched_accuracy, baseline_accuracy, docs.len())?
        };
        comparisons.push(TestSetComparison {
            name: name.clone(),
            baseline_accuracy,
            enriched_accuracy,
            z,
            p,
            significant: z > Z_CRITICAL,
        });
    }
    Ok(EnrichmentReport {
        baseline_model,
        enriched_model,
        comparisons,
    })
}
