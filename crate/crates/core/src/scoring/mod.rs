//! Scorer contracts and their implementations.
//!
//! Every stage talks to language models through two traits:
//! [`CausalScorer`] (next-token distributions and sequence log-probabilities)
//! and [`InfillScorer`] (log-probability of masked answers, optionally
//! conditioned on auxiliary text). [`NgramBackend`] implements both
//! in-process; [`RemoteScorer`] speaks the HTTP model-shim protocol.

mod ngram;
mod remote;
mod stub;
mod vocab;

pub use ngram::{train_ngram, NgramBackend, NgramConfig, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use remote::{wire, RemoteScorer, RetryPolicy};
pub use stub::{ConditionBlind, UniformScorer};
pub use vocab::{LogDist, TokenId, Vocab};

use thiserror::Error;

use crate::critics::MaskedView;
use crate::num::Real;
use crate::text::TokenSeq;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid scorer configuration: {0}")]
    InvalidConfig(String),
    #[error("masked view has no answer spans")]
    NoMaskedSpans,
    #[error("continuation is empty")]
    EmptyContinuation,
    #[error("distributions are over different vocabularies")]
    VocabMismatch,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("artifact error: {0}")]
    Artifact(String),
}

/// Autoregressive scorer over a closed vocabulary.
///
/// A context is the full token history; an empty context is the start of a
/// document. Distributions must normalize, and `sequence_logprob` must equal
/// the stepwise sum of next-token log-probabilities.
pub trait CausalScorer<F: Real>: Send + Sync {
    fn vocab(&self) -> &std::sync::Arc<Vocab>;

    fn next_token_distribution(&self, context: &[TokenId]) -> Result<LogDist<F>, ScoreError>;

    fn sequence_logprob(&self, context: &[TokenId], continuation: &[TokenId]) -> Result<F, ScoreError> {
        if continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        let mut history = context.to_vec();
        let mut total = F::zero();
        for &tok in continuation {
            let dist = self.next_token_distribution(&history)?;
            total = total + dist.logp(tok);
            history.push(tok);
        }
        Ok(total)
    }
}

/// One infill query: a masked view and an optional condition.
#[derive(Debug, Clone, Copy)]
pub struct InfillQuery<'a> {
    pub masked: &'a MaskedView,
    pub condition: Option<&'a [String]>,
}

/// Scores the hidden answers of a [`MaskedView`].
///
/// The result is a summed natural-log probability, never positive. An empty
/// condition is the same as no condition.
pub trait InfillScorer<F: Real>: Send + Sync {
    fn infill_logprob(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<F, ScoreError>;

    /// Scores several queries; results come back in request order.
    fn infill_logprob_batch(&self, queries: &[InfillQuery<'_>]) -> Result<Vec<F>, ScoreError> {
        queries
            .iter()
            .map(|q| self.infill_logprob(q.masked, q.condition))
            .collect()
    }
}

impl<F: Real, S: CausalScorer<F> + ?Sized> CausalScorer<F> for &S {
    fn vocab(&self) -> &std::sync::Arc<Vocab> {
        (**self).vocab()
    }
    fn next_token_distribution(&self, context: &[TokenId]) -> Result<LogDist<F>, ScoreError> {
        (**self).next_token_distribution(context)
    }
    fn sequence_logprob(&self, context: &[TokenId], continuation: &[TokenId]) -> Result<F, ScoreError> {
        (**self).sequence_logprob(context, continuation)
    }
}

impl<F: Real, S: InfillScorer<F> + ?Sized> InfillScorer<F> for &S {
    fn infill_logprob(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<F, ScoreError> {
        (**self).infill_logprob(masked, condition)
    }
    fn infill_logprob_batch(&self, queries: &[InfillQuery<'_>]) -> Result<Vec<F>, ScoreError> {
        (**self).infill_logprob_batch(queries)
    }
}

/// Log-probability of `continuation` after `context`; out-of-vocabulary
/// tokens score as the unknown symbol.
pub fn sequence_logprob<F: Real, S: CausalScorer<F> + ?Sized>(
    scorer: &S,
    context: &TokenSeq,
    continuation: &TokenSeq,
) -> Result<F, ScoreError> {
    let vocab = scorer.vocab();
    scorer.sequence_logprob(&vocab.encode(context.tokens()), &vocab.encode(continuation.tokens()))
}

pub fn infill_logprob<F: Real, S: InfillScorer<F> + ?Sized>(
    scorer: &S,
    masked: &MaskedView,
    condition: Option<&TokenSeq>,
) -> Result<F, ScoreError> {
    if masked.spans().is_empty() {
        return Err(ScoreError::NoMaskedSpans);
    }
    scorer.infill_logprob(masked, condition.map(TokenSeq::tokens))
}
