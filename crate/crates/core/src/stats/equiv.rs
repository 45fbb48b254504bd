//! Two-proportion z-test on accuracies, equivalent-subset selection over an
//! ensemble, and prediction concordance across models.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::corpus::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::models::{Ensemble, Predictor};

/// The significance threshold for accuracy equivalence: z ≤ 1.96, i.e. a
/// one-sided p above 0.025.
pub const Z_CRITICAL: f64 = 1.96;

/// Absolute z statistic for two accuracies over the same test size, with
/// the pooled proportion m = (a+b)/2 in the variance:
/// z = |a − b| / √(m(1−m)/n), and its one-sided normal tail p = 1 − Φ(z).
pub fn z_statistic(a: f64, b: f64, n: usize) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Data(format!(
            "accuracies must lie in [0, 1]; got {a} and {b}"
        )));
    }
    if n == 0 {
        return Err(Error::Data("test size must be at least 1".into()));
    }
    let m = (a + b) / 2.0;
    if m == 0.0 || m == 1.0 {
        return Err(Error::DegenerateVariance(format!(
            "pooled proportion {m} has zero variance (a = {a}, b = {b})"
        )));
    }
    let z = ((a - b) / (m * (1.0 - m) / n as f64).sqrt()).abs();
    let p = normal_tail(z);
    Ok((z, p))
}

/// Upper tail 1 − Φ(z) of the standard normal, via the complementary error
/// function.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// How the candidate subset is picked from an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// The k-length window over sorted accuracies minimizing max − min;
    /// ties go to the lower-accuracy window.
    Closest,
    /// The k highest accuracies.
    MostAccurate,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Closest => "closest",
            SelectionMode::MostAccurate => "most_accurate",
        }
    }
}

/// A candidate subset of ensemble members with its accuracy-equivalence
/// verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceSet {
    /// Indices into the ensemble's member list, ascending by accuracy.
    pub member_indices: Vec<usize>,
    /// Seeds of the selected members (empty when built from bare accuracies).
    pub member_seeds: Vec<u64>,
    pub mode: SelectionMode,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Accuracy spread max − min.
    pub epsilon: f64,
    pub z: f64,
    pub p: f64,
    /// Test-set size the accuracies were measured on.
    pub n: usize,
    /// True iff z ≤ 1.96.
    pub equivalent: bool,
}

/// Subset selection from bare accuracies; indices refer to the input slice.
pub fn select_equivalent_from_accuracies(
    accuracies: &[f64],
    k: usize,
    mode: SelectionMode,
    n: usize,
) -> Result<EquivalenceSet> {
    if k == 0 || k > accuracies.len() {
        return Err(Error::Config(format!(
            "subset size {k} out of range for {} accuracies",
            accuracies.len()
        )));
    }
    let mut order: Vec<usize> = (0..accuracies.len()).collect();
    order.sort_by(|&i, &j| {
        accuracies[i]
            .partial_cmp(&accuracies[j])
            .expect("finite accuracies")
            .then(i.cmp(&j))
    });
    let start = match mode {
        SelectionMode::MostAccurate => order.len() - k,
        SelectionMode::Closest => {
            let mut best = 0;
            let mut best_range = f64::INFINITY;
            // Scanning from the lowest window and keeping strict improvement
            // implements the ties-to-lower rule.
            for s in 0..=(order.len() - k) {
                let range = accuracies[order[s + k - 1]] - accuracies[order[s]];
                if range < best_range {
                    best_range = range;
                    best = s;
                }
            }
            best
        }
    };
    let member_indices: Vec<usize> = order[start..start + k].to_vec();
    let min_accuracy = accuracies[member_indices[0]];
    let max_accuracy = accuracies[member_indices[k - 1]];
    let epsilon = max_accuracy - min_accuracy;
    // A zero spread is equivalence by definition, even at the accuracy
    // extremes where the pooled variance degenerates.
    let (z, p) = if epsilon == 0.0 {
        (0.0, 0.5)
    } else {
        z_statistic(max_accuracy, min_accuracy, n)?
    };
    Ok(EquivalenceSet {
        member_indices,
        member_seeds: Vec::new(),
        mode,
        min_accuracy,
        max_accuracy,
        epsilon,
        z,
        p,
        n,
        equivalent: z <= Z_CRITICAL,
    })
}

/// Subset selection over an ensemble's test accuracies.
pub fn select_equivalent(
    ensemble: &Ensemble,
    k: usize,
    mode: SelectionMode,
    n: usize,
) -> Result<EquivalenceSet> {
    let mut set = select_equivalent_from_accuracies(&ensemble.test_accuracies(), k, mode, n)?;
    set.member_seeds = set
        .member_indices
        .iter()
        .map(|&i| ensemble.members[i].seed)
        .collect();
    Ok(set)
}

/// IDs of the documents on which every model predicts the same label.
pub fn concordant_inputs(
    models: &[&dyn Predictor],
    docs: &[&AnnotatedDocument],
) -> Result<Vec<String>> {
    if models.is_empty() {
        return Err(Error::Data("concordance needs at least one model".into()));
    }
    if docs.is_empty() {
        return Err(Error::Data("concordance over an empty document set".into()));
    }
    let mut out = Vec::new();
    'docs: for doc in docs {
        let (first, _) = models[0].predict_doc(doc)?;
        for model in &models[1..] {
            if model.predict_doc(doc)?.0 != first {
                continue 'docs;
            }
        }
        out.push(doc.id.clone());
    }
    Ok(out)
}

/// Table-style CSV of equivalence-set summaries.
pub fn equivalence_csv(sets: &[EquivalenceSet]) -> String {
    let mut out = String::from("mode,k,min_accuracy,max_accuracy,epsilon,z,p,equivalent\n");
    for s in sets {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            s.mode.as_str(),
            s.member_indices.len(),
            s.min_accuracy,
            s.max_accuracy,
            s.epsilon,
            s.z,
            s.p,
            s.equivalent
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnnotatedDocument, Label, Token};
    use crate::features::{FeatureDefinition, FeatureRegistry, LexiconSet, Matcher};
    use crate::models::{LogRegModel, LogRegPredictor};
    use approx::assert_relative_eq;

    /// Within ±1 unit in the third significant figure, or within half a unit
    /// of the reference's last quoted digit, whichever is looser.
    fn close_to_quoted(actual: f64, expected: f64, quoted_sig_figs: i32) -> bool {
        let mag = 10f64.powf(expected.abs().log10().floor());
        let tol = (mag / 100.0).max(0.5 * mag / 10f64.powi(quoted_sig_figs - 1));
        (actual - expected).abs() <= tol
    }

    #[test]
    fn reproduces_published_accuracy_comparisons() {
        // Four (a, b) pairs at n = 1000 with known one-sided p-values.
        for (a, b, expected_p, sig_figs) in [
            (0.966, 0.931, 2.8e-7, 2),
            (0.959, 0.945, 0.0191, 3),
            (0.957, 0.950, 0.1466, 4),
            (0.956, 0.953, 0.3245, 4),
        ] {
            let (_, p) = z_statistic(a, b, 1000).unwrap();
            assert!(
                close_to_quoted(p, expected_p, sig_figs),
                "({a}, {b}): p = {p:e}, expected {expected_p:e}"
            );
        }
    }

    #[test]
    fn zero_numerator_gives_half_p() {
        let (z, p) = z_statistic(0.7, 0.7, 50).unwrap();
        assert_eq!(z, 0.0);
        assert_relative_eq!(p, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn symmetric_and_monotone_in_gap() {
        let (z_ab, _) = z_statistic(0.9, 0.8, 100).unwrap();
        let (z_ba, _) = z_statistic(0.8, 0.9, 100).unwrap();
        assert_eq!(z_ab, z_ba);
        // Fixed sum a + b = 1.7: widening the gap raises z.
        let mut prev = 0.0;
        for gap in [0.02, 0.06, 0.1, 0.2] {
            let (z, _) = z_statistic(0.85 + gap / 2.0, 0.85 - gap / 2.0, 100).unwrap();
            assert!(z > prev, "gap {gap}: z {z} not above {prev}");
            prev = z;
        }
    }

    #[test]
    fn degenerate_variance_errors() {
        assert!(matches!(
            z_statistic(0.0, 0.0, 10),
            Err(Error::DegenerateVariance(_))
        ));
        assert!(matches!(
            z_statistic(1.0, 1.0, 10),
            Err(Error::DegenerateVariance(_))
        ));
        assert!(z_statistic(1.2, 0.5, 10).is_err());
        assert!(z_statistic(0.5, 0.5, 0).is_err());
    }

    #[test]
    fn closest_window_matches_brute_force() {
        let accs = [0.90, 0.91, 0.92, 0.99];
        let set =
            select_equivalent_from_accuracies(&accs, 3, SelectionMode::Closest, 1000).unwrap();
        assert_relative_eq!(set.epsilon, 0.02, max_relative = 1e-12);
        assert_eq!(set.member_indices, vec![0, 1, 2]);

        // Brute force over every k-subset on a random-ish vector: no subset
        // has a smaller range than the chosen window.
        let accs = [0.81, 0.93, 0.86, 0.90, 0.885, 0.87];
        let k = 3;
        let set = select_equivalent_from_accuracies(&accs, k, SelectionMode::Closest, 500).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..accs.len() {
            for j in 0..accs.len() {
                for l in 0..accs.len() {
                    if i < j && j < l {
                        let vals = [accs[i], accs[j], accs[l]];
                        let range = vals.iter().cloned().fold(f64::MIN, f64::max)
                            - vals.iter().cloned().fold(f64::MAX, f64::min);
                        best = best.min(range);
                    }
                }
            }
        }
        assert_relative_eq!(set.epsilon, best, max_relative = 1e-12);
    }

    #[test]
    fn most_accurate_takes_top_k() {
        let accs = [0.90, 0.91, 0.92, 0.99];
        let set =
            select_equivalent_from_accuracies(&accs, 2, SelectionMode::MostAccurate, 1000).unwrap();
        assert_eq!(set.member_indices, vec![2, 3]);
        assert_relative_eq!(set.max_accuracy, 0.99);
    }

    #[test]
    fn whole_set_and_equal_accuracy_cases() {
        let accs = [0.8, 0.6, 0.7];
        let set =
            select_equivalent_from_accuracies(&accs, 3, SelectionMode::Closest, 100).unwrap();
        assert_relative_eq!(set.epsilon, 0.2, max_relative = 1e-12);

        for mode in [SelectionMode::Closest, SelectionMode::MostAccurate] {
            for k in 1..=3 {
                let set = select_equivalent_from_accuracies(&[1.0, 1.0, 1.0], k, mode, 100).unwrap();
                assert_eq!(set.epsilon, 0.0);
                assert_eq!(set.z, 0.0);
                assert!(set.equivalent);
            }
        }
    }

    #[test]
    fn k_out_of_range_is_config_error() {
        assert!(matches!(
            select_equivalent_from_accuracies(&[0.5, 0.6], 3, SelectionMode::Closest, 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            select_equivalent_from_accuracies(&[0.5, 0.6], 0, SelectionMode::Closest, 10),
            Err(Error::Config(_))
        ));
    }

    fn adj_doc(id: &str, n_adj: usize, n_other: usize) -> AnnotatedDocument {
        let mut tokens = Vec::new();
        let mut pos = 0;
        for i in 0..(n_adj + n_other) {
            let tag = if i < n_adj { "ADJ" } else { "NOUN" };
            let w = format!("mot{i}");
            let len = w.len();
            tokens.push(Token::new(w, tag, None, (pos, pos + len), 1));
            pos += len + 1;
        }
        AnnotatedDocument::new(id, tokens, Label::News, "test").unwrap()
    }

    fn threshold_model(intercept: f64) -> LogRegModel {
        LogRegModel {
            registry_version: "concord-test".into(),
            coefficients: vec![1.0],
            intercept,
            means: vec![0.0],
            stds: vec![1.0],
            config_digest: "test".into(),
        }
    }

    #[test]
    fn concordance_on_hand_built_models() {
        let registry = FeatureRegistry::custom(
            "concord-test",
            vec![FeatureDefinition::new("adjectives", Matcher::Pos("ADJ"))],
        )
        .unwrap();
        let lexicons = LexiconSet::demo();
        // Adjective ratios 0, 1, and 1/4.
        let docs = [adj_doc("none", 0, 4), adj_doc("all", 4, 0), adj_doc("some", 1, 3)];
        let doc_refs: Vec<&AnnotatedDocument> = docs.iter().collect();
        // Decision thresholds at ratio > 0 and ratio > 0.5: they disagree
        // exactly on the ratio-1/4 document.
        let m_a = threshold_model(0.0);
        let m_b = threshold_model(-0.5);
        let p_a = LogRegPredictor { model: &m_a, registry: &registry, lexicons: &lexicons };
        let p_b = LogRegPredictor { model: &m_b, registry: &registry, lexicons: &lexicons };

        let single = concordant_inputs(&[&p_a], &doc_refs).unwrap();
        assert_eq!(single.len(), 3);

        let identical = concordant_inputs(&[&p_a, &p_a], &doc_refs).unwrap();
        assert_eq!(identical.len(), 3);

        let both = concordant_inputs(&[&p_a, &p_b], &doc_refs).unwrap();
        assert_eq!(both, vec!["none".to_string(), "all".to_string()]);

        // Adding models never adds concordant inputs.
        assert!(both.iter().all(|id| single.contains(id)));
    }

    #[test]
    fn empty_inputs_are_data_errors() {
        let docs = [adj_doc("d", 1, 1)];
        let doc_refs: Vec<&AnnotatedDocument> = docs.iter().collect();
        assert!(matches!(
            concordant_inputs(&[], &doc_refs),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn equivalence_csv_round_trips_floats() {
        let set =
            select_equivalent_from_accuracies(&[0.9, 0.87, 0.91], 2, SelectionMode::Closest, 777)
                .unwrap();
        let csv = equivalence_csv(std::slice::from_ref(&set));
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mode,k,min_accuracy,max_accuracy,epsilon,z,p,equivalent"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "closest");
        assert_eq!(row[2].parse::<f64>().unwrap(), set.min_accuracy);
        assert_eq!(row[6].parse::<f64>().unwrap(), set.p);
    }
}
