use std::sync::Arc;

use super::{CausalScorer, InfillScorer, LogDist, ScoreError, TokenId, Vocab};
use crate::critics::MaskedView;
use crate::num::Real;

/// Uniform over the vocabulary for every query.
#[derive(Debug, Clone)]
pub struct UniformScorer {
    vocab: Arc<Vocab>,
}

impl UniformScorer {
    pub fn new(vocab: Arc<Vocab>) -> Self {
        Self { vocab }
    }
}

impl<F: Real> CausalScorer<F> for UniformScorer {
    fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    fn next_token_distribution(&self, _context: &[TokenId]) -> Result<LogDist<F>, ScoreError> {
        Ok(LogDist::uniform(self.vocab.clone()))
    }
}

impl<F: Real> InfillScorer<F> for UniformScorer {
    fn infill_logprob(&self, masked: &MaskedView, _condition: Option<&[String]>) -> Result<F, ScoreError> {
        if masked.spans().is_empty() {
            return Err(ScoreError::NoMaskedSpans);
        }
        let per = -F::from_count(self.vocab.len() as u64).ln();
        Ok((0..masked.masked_count()).fold(F::zero(), |acc, _| acc + per))
    }
}

/// Wraps a scorer and drops every condition before delegating.
#[derive(Debug, Clone)]
pub struct ConditionBlind<S>(pub S);

impl<F: Real, S: InfillScorer<F>> InfillScorer<F> for ConditionBlind<S> {
    fn infill_logprob(&self, masked: &MaskedView, _condition: Option<&[String]>) -> Result<F, ScoreError> {
        self.0.infill_logprob(masked, None)
    }
}

impl<F: Real, S: CausalScorer<F>> CausalScorer<F> for ConditionBlind<S> {
    fn vocab(&self) -> &Arc<Vocab> {
        self.0.vocab()
    }

    fn next_token_distribution(&self, context: &[TokenId]) -> Result<LogDist<F>, ScoreError> {
        self.0.next_token_distribution(context)
    }
}
