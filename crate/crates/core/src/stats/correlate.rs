//! Split-half correlation of explanation sets: seeded half/half partitions,
//! Pearson correlation of the concatenated halves, and percentile bootstrap
//! intervals over many independent partitions.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::rng::{derive_indexed_rng, derive_rng};

/// Split-half Pearson correlation with its bootstrap interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Point estimate: mean of the resampled correlations (or the single
    /// partition's r when no bootstrap was run).
    pub r: f64,
    /// Percentile interval (lo, hi) over the resampled correlations.
    pub interval: (f64, f64),
    pub level: f64,
    pub resamples: usize,
    pub partition_seed: u64,
}

fn check_explanations(explanations: &[Explanation]) -> Result<usize> {
    if explanations.len() < 2 {
        return Err(Error::Data(
            "split-half correlation needs at least 2 explanations".into(),
        ));
    }
    if explanations.len() % 2 != 0 {
        return Err(Error::Data(format!(
            "split-half correlation needs an even count, got {}",
            explanations.len()
        )));
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
    Ok(len)
}

/// Pearson correlation of two equal-length vectors.
fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a concatenated half has zero variance".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// One partition-and-correlate pass: shuffle the explanation indices, take
/// the first half vs the rest (each half concatenated in ascending index
/// order), and correlate the two long vectors.
fn partition_r(explanations: &[Explanation], rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut order: Vec<usize> = (0..explanations.len()).collect();
    order.shuffle(rng);
    let half = explanations.len() / 2;
    let (mut a_idx, mut b_idx) = (order[..half].to_vec(), order[half..].to_vec());
    a_idx.sort_unstable();
    b_idx.sort_unstable();
    let concat = |idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .flat_map(|&i| explanations[i].relevances.iter().copied())
            .collect()
    };
    pearson(&concat(&a_idx), &concat(&b_idx))
}

/// Split-half Pearson correlation for one seeded partition.
pub fn explanation_correlation(explanations: &[Explanation], partition_seed: u64) -> Result<f64> {
    check_explanations(explanations)?;
    let mut rng = derive_rng(partition_seed, "correlate/partition");
    partition_r(explanations, &mut rng)
}

/// Percentile quantile with linear interpolation over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Repeat the partition-and-correlate procedure over `resamples` independent
/// seeded partitions. The interval is the ((1−level)/2, 1−(1−level)/2)
/// percentile pair of the resampled correlations; the point estimate is
/// their mean. Resamples run in parallel with per-resample derived seeds,
/// so the result is schedule-independent.
pub fn bootstrap_ci(
    explanations: &[Explanation],
    partition_seed: u64,
    resamples: usize,
    level: f64,
) -> Result<CorrelationReport> {
    if resamples < 100 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 100 resamples, got {resamples}"
        )));
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::Config(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    check_explanations(explanations)?;
    let rs: Result<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_indexed_rng(partition_seed, "correlate/partition", i);
            partition_r(explanations, &mut rng)
        })
        .collect();
    let mut rs = rs?;
    let r = rs.iter().sum::<f64>() / rs.len() as f64;
    rs.sort_by(|a, b| a.partial_cmp(b).expect("finite correlations"));
    let alpha = (1.0 - level) / 2.0;
    Ok(CorrelationReport {
        r,
        interval: (quantile(&rs, alpha), quantile(&rs, 1.0 - alpha)),
        level,
        resamples,
        partition_seed,
    })
}
