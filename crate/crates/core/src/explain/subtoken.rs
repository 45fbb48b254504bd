//! Folding piece-level relevance arrays (from subword-tokenized upstream
//! models) back onto whole tokens.

use crate::error::{Error, Result};

/// How a token's subtoken relevances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubtokenAggregation {
    /// Arithmetic mean over the span (the default).
    #[default]
    Mean,
    /// Plain sum over the span.
    Sum,
}

/// A partition of a piece sequence into per-token spans `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtokenSpanMap {
    spans: Vec<(usize, usize)>,
}

impl SubtokenSpanMap {
    /// Spans must be non-empty, contiguous, and start at piece 0.
    pub fn new(spans: Vec<(usize, usize)>) -> Result<Self> {
        let mut cursor = 0;
        for &(start, end) in &spans {
            if start != cursor {
                return Err(Error::Contract(format!(
                    "subtoken span starts at {start}, expected {cursor}"
                )));
            }
            if end <= start {
                return Err(Error::Contract(format!(
                    "subtoken span [{start}, {end}) is empty"
                )));
            }
            cursor = end;
        }
        Ok(SubtokenSpanMap { spans })
    }

    /// Build from per-token piece counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let mut spans = Vec::with_capacity(counts.len());
        let mut cursor = 0;
        for &c in counts {
            spans.push((cursor, cursor + c));
            cursor += c;
        }
        Self::new(spans)
    }

    pub fn n_tokens(&self) -> usize {
        self.spans.len()
    }

    pub fn n_pieces(&self) -> usize {
        self.spans.last().map_or(0, |&(_, end)| end)
    }
}

/// Collapse a piece-level relevance array to one value per token.
pub fn aggregate_subtokens(
    piece_relevances: &[f64],
    map: &SubtokenSpanMap,
    mode: SubtokenAggregation,
) -> Result<Vec<f64>> {
    if piece_relevances.len() != map.n_pieces() {
        return Err(Error::Contract(format!(
            "span map covers {} pieces but got {} relevances",
            map.n_pieces(),
            piece_relevances.len()
        )));
    }
    Ok(map
        .spans
        .iter()
        .map(|&(start, end)| {
            let sum: f64 = piece_relevances[start..end].iter().sum();
            match mode {
                SubtokenAggregation::Mean => sum / (end - start) as f64,
                SubtokenAggregation::Sum => sum,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sum_over_spans() {
        let map = SubtokenSpanMap::from_counts(&[1, 3, 2]).unwrap();
        let pieces = [0.1, 0.3, 0.6, 0.0, 0.5, 0.7];
        let mean = aggregate_subtokens(&pieces, &map, SubtokenAggregation::Mean).unwrap();
        assert_eq!(mean, vec![0.1, (0.3 + 0.6 + 0.0) / 3.0, (0.5 + 0.7) / 2.0]);
        let sum = aggregate_subtokens(&pieces, &map, SubtokenAggregation::Sum).unwrap();
        assert_eq!(sum, vec![0.1, 0.3 + 0.6 + 0.0, 0.5 + 0.7]);
    }

    #[test]
    fn single_piece_tokens_pass_through_unchanged() {
        let map = SubtokenSpanMap::from_counts(&[1, 1, 1]).unwrap();
        let pieces = [0.2, 0.5, 0.3];
        for mode in [SubtokenAggregation::Mean, SubtokenAggregation::Sum] {
            assert_eq!(
                aggregate_subtokens(&pieces, &map, mode).unwrap(),
                pieces.to_vec()
            );
        }
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        // Gap between spans.
        assert!(SubtokenSpanMap::new(vec![(0, 2), (3, 4)]).is_err());
        // Empty span.
        assert!(SubtokenSpanMap::new(vec![(0, 0)]).is_err());
        // Not starting at zero.
        assert!(SubtokenSpanMap::new(vec![(1, 2)]).is_err());
        // Zero piece count.
        assert!(SubtokenSpanMap::from_counts(&[2, 0]).is_err());
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        let map = SubtokenSpanMap::from_counts(&[2, 2]).unwrap();
        assert!(matches!(
            aggregate_subtokens(&[0.1, 0.2, 0.3], &map, SubtokenAggregation::Mean),
            Err(Error::Contract(_))
        ));
    }
}
