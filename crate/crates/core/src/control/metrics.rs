use super::ControlError;
use crate::num::Scalar;
use crate::text::{ngram_precision, pos_counts, split_sentences, tokenize, PosCounts, Tagger, TokenSeq};

/// Token count of the summary.
pub fn m_len<S: Scalar>(summary: &TokenSeq) -> S {
    S::from_count(summary.len() as u64)
}

/// Mean of clipped bigram and trigram precision against the document.
pub fn m_ext<S: Scalar>(summary: &TokenSeq, document: &TokenSeq) -> Result<S, ControlError> {
    if document.is_empty() {
        return Err(ControlError::EmptyDocument);
    }
    let p2: S = ngram_precision(summary, document, 2);
    let p3: S = ngram_precision(summary, document, 3);
    Ok((p2 + p3) / S::from_count(2))
}

/// `(0.1 vb + 0.2 tok + 0.3 nn + 0.4 cd) / sentences`, evaluated as one
/// integer ratio so float results are correctly rounded.
pub fn specificity<S: Scalar>(c: &PosCounts) -> Result<S, ControlError> {
    if c.sent == 0 {
        return Err(ControlError::NoSentences);
    }
    Ok(S::ratio(c.vb + 2 * c.tok + 3 * c.nn + 4 * c.cd, 10 * c.sent))
}

/// Specificity of a summary; sentences come from the sentence splitter.
pub fn m_spe<S: Scalar>(summary: &str, tagger: &dyn Tagger) -> Result<S, ControlError> {
    let mut counts = pos_counts(&tokenize(summary), tagger);
    counts.sent = split_sentences(summary).len() as u64;
    specificity(&counts)
}
