//! Corpus-level lexical diversity: pooled n-gram entropy and MSTTR.

use std::collections::{HashMap, HashSet};

use super::{TextError, TokenSeq};
use crate::num::{Real, Scalar};

pub const DEFAULT_MSTTR_WINDOW: usize = 100;

/// Shannon entropy in bits of the n-gram distribution pooled over the
/// corpus. N-grams never cross document boundaries.
pub fn ngram_entropy<F: Real>(corpus: &[TokenSeq], n: usize) -> Result<F, TextError> {
    if n == 0 {
        return Err(TextError::InvalidParameter("n-gram order must be at least 1".into()));
    }
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    let mut total = 0u64;
    for doc in corpus {
        for w in doc.tokens().windows(n) {
            *counts.entry(w).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(TextError::EmptyNgramPool { order: n });
    }
    // fixed summation order keeps the result reproducible across runs
    let mut freqs: Vec<u64> = counts.into_values().collect();
    freqs.sort_unstable();
    let total_f = F::lit(total as f64);
    let h = freqs.into_iter().fold(F::zero(), |acc, c| {
        let p = F::lit(c as f64) / total_f;
        acc - p * p.log2()
    });
    Ok(if h == F::zero() { F::zero() } else { h })
}

/// Mean segmented type/token ratio, as a percentage.
///
/// Tokens are pooled in corpus order and cut into consecutive windows of
/// `window` tokens; the trailing partial window is dropped.
pub fn msttr<S: Scalar>(corpus: &[TokenSeq], window: usize) -> Result<S, TextError> {
    if window == 0 {
        return Err(TextError::InvalidParameter("window must be at least 1".into()));
    }
    let pooled: Vec<&str> = corpus.iter().flat_map(TokenSeq::iter).collect();
    let segments = pooled.len() / window;
    if segments == 0 {
        return Err(TextError::InsufficientTokens { available: pooled.len(), window });
    }
    let types: u64 = pooled
        .chunks_exact(window)
        .map(|seg| seg.iter().collect::<HashSet<_>>().len() as u64)
        .sum();
    Ok(S::ratio(types * 100, (segments * window) as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_tokens(s.split_whitespace())
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(ngram_entropy::<f64>(&[seq("a b"), seq("a b")], 2).unwrap(), 0.0);
        assert!((ngram_entropy::<f64>(&[seq("a b c")], 2).unwrap() - 1.0).abs() < 1e-15);
        let h = ngram_entropy::<f64>(&[seq("a b"), seq("a b"), seq("a b"), seq("b c")], 2).unwrap();
        let expect = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((h - expect).abs() < 1e-12);
        assert!((h - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn entropy_needs_ngrams() {
        assert_eq!(
            ngram_entropy::<f64>(&[seq("a")], 2),
            Err(TextError::EmptyNgramPool { order: 2 })
        );
        assert!(ngram_entropy::<f64>(&[], 3).is_err());
    }

    #[test]
    fn msttr_cases() {
        assert_eq!(msttr::<f64>(&[seq("a b c d")], 4).unwrap(), 100.0);
        let repeated = TokenSeq::from_tokens(std::iter::repeat("x").take(100));
        assert_eq!(msttr::<f64>(&[repeated], 100).unwrap(), 1.0);
        assert_eq!(msttr::<Exact>(&[seq("a b a b"), seq("c c c c")], 4).unwrap(), Exact::new(75, 2));
        // tail "d e" dropped
        assert_eq!(msttr::<Exact>(&[seq("a b a b c c c c d e")], 4).unwrap(), Exact::new(75, 2));
    }

    #[test]
    fn msttr_needs_a_window() {
        assert_eq!(
            msttr::<f64>(&[seq("a b")], 3),
            Err(TextError::InsufficientTokens { available: 2, window: 3 })
        );
    }
}
