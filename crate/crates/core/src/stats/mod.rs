//! Statistical apparatus: accuracy-equivalence testing across seeds,
//! prediction concordance, split-half explanation correlation with
//! bootstrap intervals, and per-token distribution summaries.

mod correlate;
mod distribution;
mod equiv;

pub use correlate::{bootstrap_ci, explanation_correlation, CorrelationReport};
pub use distribution::{
    characterize_distribution, distribution_csv, TokenDistribution, TokenSummary,
};
pub use equiv::{
    concordant_inputs, equivalence_csv, normal_tail, select_equivalent,
    select_equivalent_from_accuracies, z_statistic, EquivalenceSet, SelectionMode, Z_CRITICAL,
};
