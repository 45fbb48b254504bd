//! Relevance propagation for the surrogate network. The predicted-label
//! output score is redistributed backwards layer by layer with the
//! epsilon-stabilized proportionality rule, tanh layers pass relevance
//! through unchanged, and pooling splits relevance across tokens by their
//! contribution to each pooled dimension.

use crate::corpus::{AnnotatedDocument, Label};
use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::models::NeuralModel;

/// Stabilizer added (with the denominator's sign) to each propagation
/// denominator.
pub const LRP_EPSILON: f64 = 1e-9;

/// Pre-normalization bookkeeping from one relevance propagation pass.
#[derive(Debug, Clone)]
pub struct LrpDiagnostics {
    /// Total relevance at each stage, output → hidden → pooled → tokens,
    /// before normalization. Conservation means these stay (almost) equal.
    pub layer_totals: [f64; 4],
    /// Largest absolute deviation of a layer total from the output score;
    /// residual float rounding after the stabilizer's residue reallocation.
    pub epsilon_leakage: f64,
    /// Token-relevance total divided out to normalize to sum 1.
    pub normalizer: f64,
}

/// Neumaier compensated summation; keeps the normalization exact even when
/// large positive and negative relevances nearly cancel.
fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Distribute `relevance` over `contribs` proportionally, with the
/// epsilon-stabilized denominator. The bias is deliberately absent from the
/// denominator, and the small residue the stabilizer absorbs is reallocated
/// across the shares by magnitude, so every layer redistributes its
/// relevance exactly (up to float rounding) even when the contributions
/// nearly cancel.
fn epsilon_rule(contribs: &[f64], relevance: f64) -> Vec<f64> {
    let z: f64 = contribs.iter().sum();
    let denom = z + LRP_EPSILON * if z >= 0.0 { 1.0 } else { -1.0 };
    let mut shares: Vec<f64> = contribs.iter().map(|c| c / denom * relevance).collect();
    let residue = relevance - shares.iter().sum::<f64>();
    let weight_total: f64 = shares.iter().map(|s| s.abs()).sum();
    if weight_total > 0.0 {
        for s in &mut shares {
            *s += residue * s.abs() / weight_total;
        }
    }
    shares
}

/// Relevance propagation with per-layer diagnostics. Runs the forward pass
/// with dropout disabled, initializes relevance at the predicted label's
/// output score, and returns token relevances normalized to sum 1.
pub fn lrp_explain_detailed(
    model: &NeuralModel,
    doc: &AnnotatedDocument,
) -> Result<(Explanation, LrpDiagnostics)> {
    if !model.has_finite_params() {
        return Err(Error::Model("model has non-finite parameters".into()));
    }
    let d = model.config.embedding_dim;
    let hd = model.config.hidden_dim;
    let buckets = model.token_buckets(doc);
    let n = buckets.len();
    if n == 0 {
        return Err(Error::Data(format!("document {} is empty", doc.id)));
    }
    let f = model.forward(&buckets, None);

    let (predicted, target) = if f.probs[1] > f.probs[0] {
        (Label::Opinion, 1usize)
    } else {
        (Label::News, 0usize)
    };
    let r_out = f.logits[target];

    // Output dense layer: only the predicted output unit carries relevance.
    let head_contribs: Vec<f64> = (0..hd)
        .map(|j| f.hidden[j] * model.w2[target * hd + j])
        .collect();
    // tanh is a monotone pointwise map: relevance passes through unchanged,
    // so the hidden relevances below already sit on the pre-activations.
    let r_hidden = epsilon_rule(&head_contribs, r_out);

    // Hidden dense layer: each hidden unit redistributes to the pooled dims.
    let mut r_pooled = vec![0.0; d];
    for j in 0..hd {
        let contribs: Vec<f64> = (0..d).map(|k| f.pooled[k] * model.w1[j * d + k]).collect();
        for (k, share) in epsilon_rule(&contribs, r_hidden[j]).into_iter().enumerate() {
            r_pooled[k] += share;
        }
    }

    // Pooling: token i contributes pool_weight_i · e_ik to pooled dim k
    // (uniform weights for mean pooling, softmax weights for attention).
    let mut relevances = vec![0.0; n];
    for k in 0..d {
        let contribs: Vec<f64> = (0..n).map(|i| f.pool_weights[i] * f.embeds[i][k]).collect();
        for (i, share) in epsilon_rule(&contribs, r_pooled[k]).into_iter().enumerate() {
            relevances[i] += share;
        }
    }

    let layer_totals = [
        r_out,
        r_hidden.iter().sum(),
        r_pooled.iter().sum(),
        relevances.iter().sum(),
    ];
    let epsilon_leakage = layer_totals
        .iter()
        .map(|t| (t - r_out).abs())
        .fold(0.0, f64::max);

    let normalizer = layer_totals[3];
    if normalizer.abs() < 1e-12 || !normalizer.is_finite() {
        return Err(Error::numeric(
            "lrp/normalize",
            format!("token relevance total {normalizer} cannot be normalized"),
        ));
    }
    for r in &mut relevances {
        *r /= normalizer;
    }
    // Fold the per-division rounding into the smallest-magnitude nonzero
    // entry (whose ulp is tiny) so the normalized relevances sum to 1
    // exactly, even for ill-conditioned relevance vectors.
    let residual = 1.0 - neumaier_sum(&relevances);
    if let Some(i) = (0..relevances.len())
        .filter(|&i| relevances[i] != 0.0)
        .min_by(|&a, &b| relevances[a].abs().total_cmp(&relevances[b].abs()))
    {
        relevances[i] += residual;
    }

    let explanation = Explanation {
        doc_id: doc.id.clone(),
        model_id: model.model_id(),
        predicted,
        relevances,
        per_feature: None,
    };
    let diagnostics = LrpDiagnostics {
        layer_totals,
        epsilon_leakage,
        normalizer,
    };
    Ok((explanation, diagnostics))
}

/// Relevance propagation without the diagnostics.
pub fn lrp_explain(model: &NeuralModel, doc: &AnnotatedDocument) -> Result<Explanation> {
    lrp_explain_detailed(model, doc).map(|(e, _)| e)
}
