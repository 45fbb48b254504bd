//! Linguistic attention maps for the feature-based logistic model. Each
//! feature's standardized contribution to the decision is distributed over
//! the tokens that triggered it, proportionally to their incidence weights,
//! and only features pushing toward the predicted class are kept.

use crate::corpus::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::features::{FeatureVector, IncidenceMatrix};
use crate::models::LogRegModel;

/// Per-token attention map A_i = Σ_j A_ij with
/// A_ij = (w_ij / Σ_i w_ij) · T_j when T_j pushes toward the predicted
/// class, 0 otherwise. T_j is the feature's standardized contribution
/// c_j (x_j − μ_j)/σ_j; features no token triggered (global features
/// included) distribute nothing.
pub fn lam_explain(
    model: &LogRegModel,
    doc: &AnnotatedDocument,
    features: &FeatureVector,
    incidence: &IncidenceMatrix,
) -> Result<Explanation> {
    if incidence.registry_version != model.registry_version
        || features.registry_version != model.registry_version
    {
        return Err(Error::Contract(format!(
            "registry mismatch: model {:?}, features {:?}, incidence {:?}",
            model.registry_version, features.registry_version, incidence.registry_version
        )));
    }
    if incidence.doc_id != doc.id {
        return Err(Error::Contract(format!(
            "incidence built for document {:?}, not {:?}",
            incidence.doc_id, doc.id
        )));
    }
    if incidence.n_tokens() != doc.len() {
        return Err(Error::Contract(format!(
            "document {:?} has {} tokens but the incidence matrix {} rows",
            doc.id,
            doc.len(),
            incidence.n_tokens()
        )));
    }
    let n_features = model.coefficients.len();
    if incidence.n_features() != n_features || features.values.len() != n_features {
        return Err(Error::Contract(format!(
            "model has {} features but got {} values / {} incidence columns",
            n_features,
            features.values.len(),
            incidence.n_features()
        )));
    }

    let (predicted, _) = model.predict(features)?;
    let contributions: Vec<f64> = (0..n_features)
        .map(|j| {
            model.coefficients[j] * (features.values[j] - model.means[j]) / model.stds[j]
        })
        .collect();

    let n_tokens = doc.len();
    let mut per_feature = vec![vec![0.0; n_features]; n_tokens];
    let mut relevances = vec![0.0; n_tokens];
    for (j, &t_j) in contributions.iter().enumerate() {
        if t_j * predicted.sign() <= 0.0 {
            continue;
        }
        for i in 0..n_tokens {
            let a_ij = incidence.normalized_share(i, j) * t_j;
            per_feature[i][j] = a_ij;
            relevances[i] += a_ij;
        }
    }

    Ok(Explanation {
        doc_id: doc.id.clone(),
        model_id: model.model_id(),
        predicted,
        relevances,
        per_feature: Some(per_feature),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Token};
    use crate::features::{
        build_incidence, extract_features, FeatureDefinition, FeatureRegistry, GlobalFeature,
        LexiconSet, Matcher,
    };
    use approx::assert_relative_eq;

    fn registry() -> FeatureRegistry {
        FeatureRegistry::custom(
            "lam-test",
            vec![
                FeatureDefinition::new("adjectives", Matcher::Pos("ADJ")),
                FeatureDefinition::new("verbs", Matcher::Pos("VERB")),
                FeatureDefinition::new("cttr", Matcher::Global(GlobalFeature::Cttr)),
            ],
        )
        .unwrap()
    }

    fn doc() -> AnnotatedDocument {
        let words = [
            ("grand", "ADJ"),
            ("petit", "ADJ"),
            ("beau", "ADJ"),
            ("court", "VERB"),
            ("table", "NOUN"),
        ];
        let mut tokens = Vec::new();
        let mut pos = 0;
        for (w, tag) in words {
            tokens.push(Token::new(w, tag, None, (pos, pos + w.len()), 1));
            pos += w.len() + 1;
        }
        AnnotatedDocument::new("d", tokens, Label::Opinion, "test").unwrap()
    }

    fn model(coefficients: Vec<f64>, intercept: f64) -> LogRegModel {
        let n = coefficients.len();
        LogRegModel {
            registry_version: "lam-test".into(),
            coefficients,
            intercept,
            means: vec![0.0; n],
            stds: vec![1.0; n],
            config_digest: "test".into(),
        }
    }

    #[test]
    fn splits_contribution_equally_and_gates_by_sign() {
        let registry = registry();
        let lexicons = LexiconSet::demo();
        let doc = doc();
        let features = extract_features(&doc, &registry, &lexicons).unwrap();
        let incidence = build_incidence(&doc, &registry, &lexicons).unwrap();
        // Positive adjective weight, negative verb weight, positive intercept
        // → predicted opinion; the verb feature opposes it and is dropped.
        let model = model(vec![2.0, -1.0, 0.5], 1.0);
        let expl = lam_explain(&model, &doc, &features, &incidence).unwrap();
        assert_eq!(expl.predicted, Label::Opinion);
        let t_adj = 2.0 * features.values[0];
        // Three adjective tokens share T_adj equally.
        for i in 0..3 {
            assert_relative_eq!(expl.relevances[i], t_adj / 3.0, max_relative = 1e-12);
        }
        // The verb token's only feature was gated out; the noun matched none.
        assert_eq!(expl.relevances[3], 0.0);
        assert_eq!(expl.relevances[4], 0.0);
    }

    #[test]
    fn completeness_over_contributing_features() {
        let registry = registry();
        let lexicons = LexiconSet::demo();
        let doc = doc();
        let features = extract_features(&doc, &registry, &lexicons).unwrap();
        let incidence = build_incidence(&doc, &registry, &lexicons).unwrap();
        let model = model(vec![1.5, 0.7, -0.3], 0.2);
        let expl = lam_explain(&model, &doc, &features, &incidence).unwrap();
        let sign = expl.predicted.sign();
        // Token relevances sum to the total of same-sign contributions from
        // features with token support (cttr is global: no support).
        let expected: f64 = [
            1.5 * features.values[0],
            0.7 * features.values[1],
        ]
        .into_iter()
        .filter(|t| t * sign > 0.0)
        .sum();
        let total: f64 = expl.relevances.iter().sum();
        assert_relative_eq!(total, expected, max_relative = 1e-12);
    }

    #[test]
    fn global_features_never_reach_tokens() {
        let registry = registry();
        let lexicons = LexiconSet::demo();
        let doc = doc();
        let features = extract_features(&doc, &registry, &lexicons).unwrap();
        let incidence = build_incidence(&doc, &registry, &lexicons).unwrap();
        // Only the global cttr feature carries weight; nothing reaches tokens.
        let model = model(vec![0.0, 0.0, 3.0], 0.0);
        let expl = lam_explain(&model, &doc, &features, &incidence).unwrap();
        assert!(expl.relevances.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn per_feature_rows_sum_to_token_relevance() {
        let registry = registry();
        let lexicons = LexiconSet::demo();
        let doc = doc();
        let features = extract_features(&doc, &registry, &lexicons).unwrap();
        let incidence = build_incidence(&doc, &registry, &lexicons).unwrap();
        let model = model(vec![1.0, 2.0, 0.1], -0.4);
        let expl = lam_explain(&model, &doc, &features, &incidence).unwrap();
        let per_feature = expl.per_feature.as_ref().unwrap();
        for (row, &r) in per_feature.iter().zip(&expl.relevances) {
            assert_relative_eq!(row.iter().sum::<f64>(), r, max_relative = 1e-12);
        }
    }

    #[test]
    fn registry_mismatch_is_contract_error() {
        let registry = registry();
        let lexicons = LexiconSet::demo();
        let doc = doc();
        let features = extract_features(&doc, &registry, &lexicons).unwrap();
        let incidence = build_incidence(&doc, &registry, &lexicons).unwrap();
        let mut model = model(vec![1.0, 1.0, 1.0], 0.0);
        model.registry_version = "other".into();
        assert!(matches!(
            lam_explain(&model, &doc, &features, &incidence),
            Err(Error::Contract(_))
        ));
    }
}
