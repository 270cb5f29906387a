//! Saliency, faithfulness and brevity critics.
//!
//! Both likelihood critics estimate a pointwise mutual information as the
//! difference between a conditioned and an unconditioned infill score over
//! one shared [`MaskedView`].

mod mask;

pub use mask::{mask_by_tfidf, AnswerSpan, MaskPolicy, MaskedView, MASK_TOKEN};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::scoring::{InfillQuery, InfillScorer, ScoreError};
use crate::text::{CorpusStats, TokenSeq};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticError {
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("text is empty")]
    EmptyText,
    #[error("invalid critic configuration: {0}")]
    InvalidConfig(String),
    #[error("text has no maskable content tokens")]
    NothingToMask,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticConfig<F> {
    /// Saliency threshold in log space, scaled by `|y|/|x|` at use.
    pub tau_s_log: F,
    pub tau_f_log: F,
    pub tau_b: F,
    pub mask_fraction: f64,
    pub mask_policy: MaskPolicy,
    pub seed: u64,
    /// Divide each PMI by the number of masked tokens.
    #[serde(default)]
    pub normalized: bool,
}

impl<F: Real> Default for CriticConfig<F> {
    fn default() -> Self {
        Self {
            tau_s_log: F::lit(14.0).ln(),
            tau_f_log: F::lit(1.7).ln(),
            tau_b: F::lit(0.2),
            mask_fraction: 0.25,
            mask_policy: MaskPolicy::Tfidf,
            seed: 0,
            normalized: false,
        }
    }
}

impl<F: Real> CriticConfig<F> {
    pub fn validate(&self) -> Result<(), CriticError> {
        if !self.tau_s_log.is_finite() || !self.tau_f_log.is_finite() {
            return Err(CriticError::InvalidConfig("thresholds must be finite".into()));
        }
        if !(self.tau_b > F::zero() && self.tau_b <= F::one()) {
            return Err(CriticError::InvalidConfig(format!("tau_b {} outside (0, 1]", self.tau_b)));
        }
        if !(self.mask_fraction > 0.0 && self.mask_fraction < 1.0) {
            return Err(CriticError::InvalidConfig(format!(
                "mask_fraction {} outside (0, 1)",
                self.mask_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Critic {
    Brevity,
    Saliency,
    Faithfulness,
}

/// Outcome of the critics on one pair.
///
/// Likelihood fields are `None` only when evaluation stopped early at an
/// earlier rejection (see [`screen_pair`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticVerdict<F> {
    #[serde(rename = "pmi_s")]
    pub pmi_saliency: Option<F>,
    #[serde(rename = "pmi_f")]
    pub pmi_faithfulness: Option<F>,
    pub compression: F,
    pub pass_s: Option<bool>,
    pub pass_f: Option<bool>,
    pub pass_b: bool,
}

impl<F: Real> CriticVerdict<F> {
    pub fn pass_all(&self) -> bool {
        self.pass_b && self.pass_s == Some(true) && self.pass_f == Some(true)
    }

    /// First failing critic in brevity, saliency, faithfulness order.
    pub fn first_rejection(&self) -> Option<Critic> {
        if !self.pass_b {
            Some(Critic::Brevity)
        } else if self.pass_s != Some(true) {
            Some(Critic::Saliency)
        } else if self.pass_f != Some(true) {
            Some(Critic::Faithfulness)
        } else {
            None
        }
    }
}

fn text_seed(seed: u64, text: &TokenSeq) -> u64 {
    // FNV-1a over the tokens, folded into the configured seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in text.iter() {
        for b in t.bytes().chain(std::iter::once(0)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    seed ^ h
}

fn masked_pmi<F: Real, S: InfillScorer<F> + ?Sized>(
    target: &TokenSeq,
    condition: &TokenSeq,
    infill: &S,
    cfg: &CriticConfig<F>,
    stats: &CorpusStats,
) -> Result<F, CriticError> {
    if target.is_empty() || condition.is_empty() {
        return Err(CriticError::EmptyText);
    }
    let view = mask_by_tfidf(target, stats, cfg.mask_fraction, text_seed(cfg.seed, target), cfg.mask_policy)?;
    let scores = infill.infill_logprob_batch(&[
        InfillQuery { masked: &view, condition: Some(condition.tokens()) },
        InfillQuery { masked: &view, condition: None },
    ])?;
    let [with, without] = scores[..] else {
        return Err(ScoreError::Protocol(format!("expected 2 infill results, got {}", scores.len())).into());
    };
    let pmi = with - without;
    Ok(if cfg.normalized { pmi / F::from_count(view.masked_count() as u64) } else { pmi })
}

/// `log p(x | x_mask, y) - log p(x | x_mask)`.
pub fn saliency_pmi<F: Real, S: InfillScorer<F> + ?Sized>(
    x: &TokenSeq,
    y: &TokenSeq,
    infill: &S,
    cfg: &CriticConfig<F>,
    stats: &CorpusStats,
) -> Result<F, CriticError> {
    masked_pmi(x, y, infill, cfg, stats)
}

/// `log p(y | y_mask, x) - log p(y | y_mask)`.
pub fn faithfulness_pmi<F: Real, S: InfillScorer<F> + ?Sized>(
    x: &TokenSeq,
    y: &TokenSeq,
    infill: &S,
    cfg: &CriticConfig<F>,
    stats: &CorpusStats,
) -> Result<F, CriticError> {
    masked_pmi(y, x, infill, cfg, stats)
}

fn compression<F: Real>(x: &TokenSeq, y: &TokenSeq) -> Result<F, CriticError> {
    if x.is_empty() || y.is_empty() {
        return Err(CriticError::EmptyText);
    }
    Ok(F::ratio(y.len() as u64, x.len() as u64))
}

fn saliency_passes<F: Real>(pmi: F, ratio: F, cfg: &CriticConfig<F>) -> bool {
    pmi > cfg.tau_s_log * ratio
}

/// Runs all three critics and fills every field of the verdict.
pub fn apply_critics<F: Real, S: InfillScorer<F> + ?Sized>(
    x: &TokenSeq,
    y: &TokenSeq,
    cfg: &CriticConfig<F>,
    infill: &S,
    stats: &CorpusStats,
) -> Result<CriticVerdict<F>, CriticError> {
    let ratio = compression::<F>(x, y)?;
    let pmi_s = saliency_pmi(x, y, infill, cfg, stats)?;
    let pmi_f = faithfulness_pmi(x, y, infill, cfg, stats)?;
    Ok(CriticVerdict {
        pmi_saliency: Some(pmi_s),
        pmi_faithfulness: Some(pmi_f),
        compression: ratio,
        pass_s: Some(saliency_passes(pmi_s, ratio, cfg)),
        pass_f: Some(pmi_f > cfg.tau_f_log),
        pass_b: ratio < cfg.tau_b,
    })
}

/// Like [`apply_critics`] but stops at the first rejection, checking
/// brevity, then saliency, then faithfulness. `pass_all` agrees with the
/// full evaluation on every pair.
pub fn screen_pair<F: Real, S: InfillScorer<F> + ?Sized>(
    x: &TokenSeq,
    y: &TokenSeq,
    cfg: &CriticConfig<F>,
    infill: &S,
    stats: &CorpusStats,
) -> Result<CriticVerdict<F>, CriticError> {
    let ratio = compression::<F>(x, y)?;
    let mut v = CriticVerdict {
        pmi_saliency: None,
        pmi_faithfulness: None,
        compression: ratio,
        pass_s: None,
        pass_f: None,
        pass_b: ratio < cfg.tau_b,
    };
    if !v.pass_b {
        return Ok(v);
    }
    let pmi_s = saliency_pmi(x, y, infill, cfg, stats)?;
    v.pmi_saliency = Some(pmi_s);
    v.pass_s = Some(saliency_passes(pmi_s, ratio, cfg));
    if v.pass_s != Some(true) {
        return Ok(v);
    }
    let pmi_f = faithfulness_pmi(x, y, infill, cfg, stats)?;
    v.pmi_faithfulness = Some(pmi_f);
    v.pass_f = Some(pmi_f > cfg.tau_f_log);
    Ok(v)
}
