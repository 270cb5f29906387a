//! Candidate generation: a prefix, a summary sampled after it, then a
//! document sampled with a product-of-experts penalty on its unconditional
//! likelihood.

mod decode;
mod prefix;

pub use decode::{nucleus_sample, nucleus_support, poe_next_distribution, sample_within, temper};
pub use prefix::{format_prefix, render_prefix, PrefixSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::scoring::{CausalScorer, LogDist, ScoreError, TokenId, Vocab};
use crate::text::{detokenize, split_sentences, tokenize};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("{0} list is empty")]
    EmptyList(&'static str),
    #[error("invalid decoding parameters: {0}")]
    InvalidParams(String),
    #[error("distributions are over different vocabularies")]
    VocabMismatch,
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    /// Weight of the unconditional penalty.
    pub alpha: f64,
    pub top_p: f64,
    pub temperature: f64,
    pub max_doc_tokens: usize,
    pub min_summary_sentences: u8,
    pub max_summary_sentences: u8,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            top_p: 0.9,
            temperature: 1.0,
            max_doc_tokens: 1024,
            min_summary_sentences: 1,
            max_summary_sentences: 5,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidParams(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be finite and non-negative", self.alpha));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature {} must be positive", self.temperature));
        }
        if self.max_doc_tokens == 0 {
            return bad("max_doc_tokens must be at least 1".into());
        }
        if !(1 <= self.min_summary_sentences
            && self.min_summary_sentences <= self.max_summary_sentences
            && self.max_summary_sentences <= 5)
        {
            return bad(format!(
                "summary sentences {}..={} outside 1..=5",
                self.min_summary_sentences, self.max_summary_sentences
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub id: u64,
    pub prefix: String,
    pub summary: String,
    pub document: String,
    pub params: DecodeParams,
    /// Number of summary sentences drawn for this pair.
    pub summary_sentences: u8,
    /// Teacher generation: 0 for the initial model, r after r rounds of
    /// self-training.
    pub round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    EmptySummary,
    EmptyDocument,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Pair(CandidatePair),
    Discarded(DiscardReason),
}

fn is_terminal(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}

/// Removes reserved symbols the generator must never emit.
fn emittable<F: Real>(dist: LogDist<F>) -> Result<LogDist<F>, ScoreError> {
    let vocab = dist.vocab().clone();
    let weights = dist
        .values()
        .iter()
        .enumerate()
        .map(|(t, &l)| if Vocab::is_emittable(t as TokenId) { l } else { F::neg_infinity() })
        .collect();
    LogDist::from_log_weights(vocab, weights)
}

/// One document step. The nucleus is taken from the conditional
/// distribution; the draw uses the penalized distribution restricted to it.
fn document_step<F: Real, S, R>(
    teacher: &S,
    cond_ctx: &[TokenId],
    doc: &[TokenId],
    params: &DecodeParams,
    rng: &mut R,
) -> Result<TokenId, GenError>
where
    S: CausalScorer<F> + ?Sized,
    R: Rng + ?Sized,
{
    let top_p = F::lit(params.top_p);
    let temperature = F::lit(params.temperature);
    let cond = emittable(teacher.next_token_distribution(cond_ctx)?)?;
    let support = nucleus_support(&temper(&cond, temperature), top_p);
    let combined = if params.alpha > 0.0 {
        let uncond = teacher.next_token_distribution(doc)?;
        poe_next_distribution(&cond, &uncond, F::lit(params.alpha))?
    } else {
        cond
    };
    Ok(sample_within(&temper(&combined, temperature), &support, rng))
}

fn sample_summary<F: Real, S, R>(
    teacher: &S,
    prefix_ids: &[TokenId],
    sentences: u8,
    params: &DecodeParams,
    rng: &mut R,
) -> Result<(Vec<TokenId>, bool), GenError>
where
    S: CausalScorer<F> + ?Sized,
    R: Rng + ?Sized,
{
    let vocab = teacher.vocab().clone();
    let mut ctx = prefix_ids.to_vec();
    let mut summary = Vec::new();
    let mut done = 0u8;
    let mut prev_terminal = false;
    while summary.len() < params.max_doc_tokens {
        let dist = emittable(teacher.next_token_distribution(&ctx)?)?;
        let tok = nucleus_sample(&dist, F::lit(params.top_p), F::lit(params.temperature), rng);
        if tok == Vocab::EOD_ID {
            return Ok((summary, true));
        }
        summary.push(tok);
        ctx.push(tok);
        let terminal = is_terminal(vocab.token(tok));
        if terminal && !prev_terminal {
            done += 1;
            if done == sentences {
                break;
            }
        }
        prev_terminal = terminal;
    }
    Ok((summary, false))
}

/// Samples one candidate pair.
///
/// The summary is drawn from `p(. | P)` until the drawn number of sentences
/// is complete; the document is drawn token by token from
/// `p(. | P, y, x_<t) p(. | x_<t)^-alpha` until `</d>` or the token cap.
pub fn generate_pair<F: Real, S, R>(
    teacher: &S,
    spec: &PrefixSpec,
    params: &DecodeParams,
    rng: &mut R,
    id: u64,
    round: u32,
) -> Result<Generated, GenError>
where
    S: CausalScorer<F> + ?Sized,
    R: Rng + ?Sized,
{
    generate_with(teacher, spec, params, rng, id, round, |teacher, ctx, doc, rng| {
        document_step(teacher, ctx, doc, params, rng)
    })
}

/// Plain conditional decoding of the document, with no penalty term.
pub fn generate_pair_conditional<F: Real, S, R>(
    teacher: &S,
    spec: &PrefixSpec,
    params: &DecodeParams,
    rng: &mut R,
    id: u64,
    round: u32,
) -> Result<Generated, GenError>
where
    S: CausalScorer<F> + ?Sized,
    R: Rng + ?Sized,
{
    generate_with(teacher, spec, params, rng, id, round, |teacher, ctx, _doc, rng| {
        let dist = emittable(teacher.next_token_distribution(ctx)?)?;
        Ok(nucleus_sample(&dist, F::lit(params.top_p), F::lit(params.temperature), rng))
    })
}

fn generate_with<F: Real, S, R, Step>(
    teacher: &S,
    spec: &PrefixSpec,
    params: &DecodeParams,
    rng: &mut R,
    id: u64,
    round: u32,
    mut step: Step,
) -> Result<Generated, GenError>
where
    S: CausalScorer<F> + ?Sized,
    R: Rng + ?Sized,
    Step: FnMut(&S, &[TokenId], &[TokenId], &mut R) -> Result<TokenId, GenError>,
{
    params.validate()?;
    let vocab = teacher.vocab().clone();
    let prefix = render_prefix(spec, rng);
    let sentences = rng.random_range(params.min_summary_sentences..=params.max_summary_sentences);
    let prefix_ids = vocab.encode(tokenize(&prefix).tokens());

    let (summary, ended) = sample_summary(teacher, &prefix_ids, sentences, params, rng)?;
    if summary.is_empty() {
        return Ok(Generated::Discarded(DiscardReason::EmptySummary));
    }
    let mut ctx = prefix_ids;
    ctx.extend_from_slice(&summary);
    let mut doc: Vec<TokenId> = Vec::new();
    if !ended {
        while doc.len() < params.max_doc_tokens {
            let tok = step(teacher, &ctx, &doc, rng)?;
            if tok == Vocab::EOD_ID {
                break;
            }
            doc.push(tok);
            ctx.push(tok);
        }
    }
    if doc.is_empty() {
        return Ok(Generated::Discarded(DiscardReason::EmptyDocument));
    }
    let render = |ids: &[TokenId]| detokenize(&ids.iter().map(|&t| vocab.token(t)).collect::<Vec<_>>());
    let summary_text = render(&summary);
    debug_assert!((1..=5).contains(&split_sentences(&summary_text).len()));
    Ok(Generated::Pair(CandidatePair {
        id,
        prefix,
        summary: summary_text,
        document: render(&doc),
        params: *params,
        summary_sentences: sentences,
        round,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{NgramBackend, NgramConfig};
    use crate::text::TokenSeq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn teacher() -> NgramBackend {
        let docs: Vec<TokenSeq> = [
            "Seattle, (CNN) -- the port reopened on monday. crews cleared the channel. ships returned to the docks. officials praised the crews.",
            "Boston, (AP) -- the council passed the budget. the vote was close. taxes will rise next year. residents protested the plan.",
            "Seattle, (AP) -- the storm closed the port. crews worked overnight. the channel stayed shut. ships waited offshore.",
        ]
        .iter()
        .map(|s| tokenize(s))
        .collect();
        NgramBackend::train(&docs, NgramConfig { order: 3, smoothing: 0.01, cache_weight: 1.0 }).unwrap()
    }

    fn spec() -> PrefixSpec {
        PrefixSpec::new(vec!["Seattle".into(), "Boston".into()], vec!["CNN".into(), "AP".into()]).unwrap()
    }

    #[test]
    fn replay_is_identical() {
        let t = teacher();
        let p = DecodeParams { max_doc_tokens: 60, ..Default::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..10).map(|i| generate_pair::<f64, _, _>(&t, &spec(), &p, &mut rng, i, 0).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_alpha_matches_conditional_decoding() {
        let t = teacher();
        let p = DecodeParams { alpha: 0.0, max_doc_tokens: 80, ..Default::default() };
        for seed in 0..20 {
            let a = generate_pair::<f64, _, _>(&t, &spec(), &p, &mut ChaCha8Rng::seed_from_u64(seed), 0, 0).unwrap();
            let b = generate_pair_conditional::<f64, _, _>(&t, &spec(), &p, &mut ChaCha8Rng::seed_from_u64(seed), 0, 0)
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn summaries_have_one_to_five_sentences() {
        let t = teacher();
        let p = DecodeParams { max_doc_tokens: 40, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pairs = 0;
        for i in 0..200 {
            if let Generated::Pair(c) = generate_pair::<f64, _, _>(&t, &spec(), &p, &mut rng, i, 0).unwrap() {
                let n = split_sentences(&c.summary).len();
                assert!((1..=5).contains(&n), "{n} sentences in {:?}", c.summary);
                assert!(!c.document.is_empty());
                assert!(c.prefix.ends_with(") --"));
                pairs += 1;
            }
        }
        assert!(pairs > 0);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            DecodeParams { alpha: -1.0, ..Default::default() },
            DecodeParams { top_p: 0.0, ..Default::default() },
            DecodeParams { temperature: 0.0, ..Default::default() },
            DecodeParams { max_doc_tokens: 0, ..Default::default() },
            DecodeParams { max_summary_sentences: 6, ..Default::default() },
            DecodeParams { min_summary_sentences: 3, max_summary_sentences: 2, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        DecodeParams::default().validate().unwrap();
    }
}
