use std::collections::HashMap;

use super::TokenSeq;
use crate::num::Scalar;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram precision of `candidate` against `reference`.
///
/// Returns 0 when the candidate has fewer than `n` tokens.
pub fn ngram_precision<S: Scalar>(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> S {
    assert!(n >= 1, "n-gram order must be at least 1");
    let cand = candidate.tokens();
    if cand.len() < n {
        return S::zero();
    }
    let reference = ngram_counts(reference.tokens(), n);
    let cand_counts = ngram_counts(cand, n);
    let matched: u64 = cand_counts
        .iter()
        .map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0)))
        .sum();
    let total = (cand.len() + 1 - n) as u64;
    S::ratio(matched, total)
}
