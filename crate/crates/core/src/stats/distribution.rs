//! Per-token distribution of relevance across an explanation set: the
//! five-number summary behind box plots, plus means and nonzero counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::Explanation;

/// Box-plot statistics for one token position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Number of explanations giving this token nonzero relevance.
    pub nonzero_count: usize,
}

/// Per-token relevance distributions over a set of explanations of the same
/// document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenDistribution {
    /// Number of explanations summarized.
    pub set_size: usize,
    pub tokens: Vec<TokenSummary>,
}

/// Median of a sorted slice.
fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Quartiles by the median-of-halves rule: the median splits the sorted
/// values into a lower and an upper half (excluding the median itself when
/// the count is odd), and q1/q3 are the halves' medians. For a single value
/// all three quartiles collapse onto it.
fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let n = sorted.len();
    let median = median_sorted(sorted);
    if n == 1 {
        return (sorted[0], median, sorted[0]);
    }
    let half = n / 2;
    let lower = &sorted[..half];
    let upper = &sorted[n - half..];
    (median_sorted(lower), median, median_sorted(upper))
}

/// Five-number summary + mean + nonzero count per token position across the
/// explanation set.
pub fn characterize_distribution(explanations: &[Explanation]) -> Result<TokenDistribution> {
    if explanations.is_empty() {
        return Err(Error::Data(
            "distribution over an empty explanation set".into(),
        ));
    }
    let len = explanations[0].relevances.len();
    for e in explanations {
        if e.relevances.len() != len {
            return Err(Error::Contract(format!(
                "explanation lengths differ: {} vs {}",
                len,
                e.relevances.len()
            )));
        }
    }
    let set_size = explanations.len();
    let mut tokens = Vec::with_capacity(len);
    for t in 0..len {
        let mut values: Vec<f64> = explanations.iter().map(|e| e.relevances[t]).collect();
        let nonzero_count = values.iter().filter(|&&v| v != 0.0).count();
        let mean = values.iter().sum::<f64>() / set_size as f64;
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite relevances"));
        let (q1, median, q3) = quartiles(&values);
        tokens.push(TokenSummary {
            min: values[0],
            q1,
            median,
            q3,
            max: values[set_size - 1],
            mean,
            nonzero_count,
        });
    }
    Ok(TokenDistribution { set_size, tokens })
}

/// CSV of the distribution, one row per token in document order. `surfaces`
/// supplies the token column and must match the token count.
pub fn distribution_csv(distribution: &TokenDistribution, surfaces: &[String]) -> Result<String> {
    if surfaces.len() != distribution.tokens.len() {
        return Err(Error::Contract(format!(
            "{} surfaces for {} token summaries",
            surfaces.len(),
            distribution.tokens.len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "token_index",
        "surface",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "mean",
        "nonzero_count",
    ])
    .map_err(|e| Error::Data(e.to_string()))?;
    for (i, (s, t)) in surfaces.iter().zip(&distribution.tokens).enumerate() {
        wtr.write_record([
            i.to_string(),
            s.clone(),
            format!("{:.16e}", t.min),
            format!("{:.16e}", t.q1),
            format!("{:.16e}", t.median),
            format!("{:.16e}", t.q3),
            format!("{:.16e}", t.max),
            format!("{:.16e}", t.mean),
            t.nonzero_count.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use approx::assert_relative_eq;

    fn expl(values: &[f64]) -> Explanation {
        Explanation {
            doc_id: "d".into(),
            model_id: "m".into(),
            predicted: Label::News,
            relevances: values.to_vec(),
            per_feature: None,
        }
    }

    #[test]
    fn single_explanation_collapses_summary() {
        let dist = characterize_distribution(&[expl(&[0.4, 0.6])]).unwrap();
        for (t, v) in dist.tokens.iter().zip([0.4, 0.6]) {
            assert_eq!(t.min, v);
            assert_eq!(t.q1, v);
            assert_eq!(t.median, v);
            assert_eq!(t.q3, v);
            assert_eq!(t.max, v);
            assert_eq!(t.mean, v);
        }
    }

    #[test]
    fn two_explanations_median_is_midpoint() {
        let dist = characterize_distribution(&[expl(&[0.2]), expl(&[0.6])]).unwrap();
        assert_relative_eq!(dist.tokens[0].median, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn quartile_rule_on_hand_values() {
        let set: Vec<Explanation> = [1.0, 2.0, 3.0, 4.0, 100.0]
            .iter()
            .map(|&v| expl(&[v]))
            .collect();
        let dist = characterize_distribution(&set).unwrap();
        let t = &dist.tokens[0];
        assert_relative_eq!(t.q1, 1.5, max_relative = 1e-12);
        assert_relative_eq!(t.median, 3.0, max_relative = 1e-12);
        assert_relative_eq!(t.q3, 52.0, max_relative = 1e-12);
        assert_eq!(t.min, 1.0);
        assert_eq!(t.max, 100.0);
        assert_relative_eq!(t.mean, 22.0, max_relative = 1e-12);
    }

    #[test]
    fn summary_is_ordered_and_counts_nonzero() {
        let set = vec![
            expl(&[0.0, 0.3]),
            expl(&[0.5, 0.1]),
            expl(&[0.0, 0.2]),
            expl(&[0.2, 0.4]),
        ];
        let dist = characterize_distribution(&set).unwrap();
        for t in &dist.tokens {
            assert!(t.min <= t.q1 && t.q1 <= t.median && t.median <= t.q3 && t.q3 <= t.max);
            assert!(t.nonzero_count <= dist.set_size);
        }
        assert_eq!(dist.tokens[0].nonzero_count, 2);
        assert_eq!(dist.tokens[1].nonzero_count, 4);
    }

    #[test]
    fn nonzero_count_never_decreases_as_explanations_accumulate() {
        let pool = vec![
            expl(&[0.0, 0.1, 0.0]),
            expl(&[0.4, 0.0, 0.0]),
            expl(&[0.0, 0.0, 0.6]),
            expl(&[0.1, 0.1, 0.1]),
        ];
        let mut prev = vec![0usize; 3];
        for upto in 1..=pool.len() {
            let dist = characterize_distribution(&pool[..upto]).unwrap();
            for (t, p) in dist.tokens.iter().zip(&prev) {
                assert!(t.nonzero_count >= *p);
            }
            prev = dist.tokens.iter().map(|t| t.nonzero_count).collect();
        }
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        assert!(matches!(
            characterize_distribution(&[expl(&[0.1]), expl(&[0.1, 0.2])]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn csv_round_trips_quartiles_exactly() {
        let set = vec![expl(&[1.0 / 3.0, 0.9]), expl(&[0.25, 0.123456789012345])];
        let dist = characterize_distribution(&set).unwrap();
        let csv_text = distribution_csv(&dist, &["un".into(), "deux".into()]).unwrap();
        let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        for (row, t) in rows.iter().zip(&dist.tokens) {
            assert_eq!(row[3].parse::<f64>().unwrap(), t.q1);
            assert_eq!(row[4].parse::<f64>().unwrap(), t.median);
            assert_eq!(row[5].parse::<f64>().unwrap(), t.q3);
        }
    }
}
