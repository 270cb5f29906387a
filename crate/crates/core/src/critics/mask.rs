use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CriticError;
use crate::text::{is_content_token, tfidf_rank, CorpusStats, TokenSeq};

/// Placeholder rendered in place of masked tokens.
pub const MASK_TOKEN: &str = "<mask>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskPolicy {
    /// Highest TF-IDF content tokens first.
    #[default]
    Tfidf,
    /// Uniformly random content tokens, drawn from the configured seed.
    Random,
}

impl std::str::FromStr for MaskPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tfidf" => Ok(Self::Tfidf),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown mask policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub start: usize,
    pub tokens: Vec<String>,
}

/// A token sequence with some positions hidden, plus the hidden answers.
///
/// Answers restore the original sequence exactly; spans are sorted,
/// non-overlapping and maximal (adjacent masked tokens share one span).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedView {
    tokens: Vec<String>,
    masked: Vec<bool>,
    spans: Vec<AnswerSpan>,
}

impl MaskedView {
    /// Masks `positions` of `tokens`. Positions may come in any order.
    pub fn new(tokens: Vec<String>, positions: &[usize]) -> Result<Self, CriticError> {
        let mut masked = vec![false; tokens.len()];
        for &p in positions {
            if p >= tokens.len() {
                return Err(CriticError::InvalidMask(format!(
                    "position {p} outside sequence of {}",
                    tokens.len()
                )));
            }
            masked[p] = true;
        }
        let mut spans: Vec<AnswerSpan> = Vec::new();
        for (i, &m) in masked.iter().enumerate() {
            if !m {
                continue;
            }
            match spans.last_mut() {
                Some(s) if s.start + s.tokens.len() == i => s.tokens.push(tokens[i].clone()),
                _ => spans.push(AnswerSpan { start: i, tokens: vec![tokens[i].clone()] }),
            }
        }
        Ok(Self { tokens, masked, spans })
    }

    /// Rebuilds a view from its wire form: visible tokens with
    /// [`MASK_TOKEN`] at gaps, plus answer spans.
    pub fn from_parts(slots: &[String], spans: Vec<AnswerSpan>) -> Result<Self, CriticError> {
        let mut tokens: Vec<String> = slots.to_vec();
        let mut masked = vec![false; slots.len()];
        let mut last_end = 0;
        for s in &spans {
            if s.tokens.is_empty() || s.start < last_end || s.start + s.tokens.len() > slots.len() {
                return Err(CriticError::InvalidMask("spans must be non-empty, sorted and in range".into()));
            }
            for (k, t) in s.tokens.iter().enumerate() {
                let at = s.start + k;
                if slots[at] != MASK_TOKEN {
                    return Err(CriticError::InvalidMask(format!("slot {at} is not a gap")));
                }
                tokens[at] = t.clone();
                masked[at] = true;
            }
            last_end = s.start + s.tokens.len();
        }
        if masked.iter().zip(slots).any(|(&m, s)| !m && s == MASK_TOKEN) {
            return Err(CriticError::InvalidMask("gap without an answer".into()));
        }
        Self::new(tokens, &masked.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> &[AnswerSpan] {
        &self.spans
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.masked[i]
    }

    /// The original token at `i`, masked or not.
    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    /// Visible token at `i`, `None` for gaps.
    pub fn visible(&self, i: usize) -> Option<&str> {
        (!self.masked[i]).then(|| self.tokens[i].as_str())
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    /// Fraction of all positions that are hidden.
    pub fn fraction(&self) -> f64 {
        if self.tokens.is_empty() {
            0.0
        } else {
            self.masked_count() as f64 / self.tokens.len() as f64
        }
    }

    /// Visible tokens with [`MASK_TOKEN`] at every gap.
    pub fn slots(&self) -> Vec<String> {
        self.tokens
            .iter()
            .zip(&self.masked)
            .map(|(t, &m)| if m { MASK_TOKEN.to_string() } else { t.clone() })
            .collect()
    }

    pub fn restore(&self) -> Vec<String> {
        let mut out = self.slots();
        for s in &self.spans {
            for (k, t) in s.tokens.iter().enumerate() {
                out[s.start + k] = t.clone();
            }
        }
        out
    }
}

/// Masks `ceil(fraction * content)` content tokens of `text`.
///
/// Under [`MaskPolicy::Tfidf`] positions are ranked by the TF-IDF score of
/// their token (ties by position) and `seed` is unused; under
/// [`MaskPolicy::Random`] positions are a seeded uniform sample.
pub fn mask_by_tfidf(
    text: &TokenSeq,
    stats: &CorpusStats,
    fraction: f64,
    seed: u64,
    policy: MaskPolicy,
) -> Result<MaskedView, CriticError> {
    if text.is_empty() {
        return Err(CriticError::EmptyText);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CriticError::InvalidConfig(format!("mask fraction {fraction} outside (0, 1)")));
    }
    let content: Vec<usize> = text
        .iter()
        .enumerate()
        .filter(|(_, t)| is_content_token(t))
        .map(|(i, _)| i)
        .collect();
    if content.is_empty() {
        return Err(CriticError::NothingToMask);
    }
    let take = ((fraction * content.len() as f64).ceil() as usize).clamp(1, content.len());
    let chosen: Vec<usize> = match policy {
        MaskPolicy::Tfidf => {
            let ranked = tfidf_rank::<f64>(text, stats);
            let score: std::collections::HashMap<&str, f64> =
                ranked.iter().map(|s| (s.term.as_str(), s.score)).collect();
            let mut order = content.clone();
            order.sort_by(|&a, &b| {
                let (sa, sb) = (score[text.tokens()[a].as_str()], score[text.tokens()[b].as_str()]);
                sb.partial_cmp(&sa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            order.truncate(take);
            order
        }
        MaskPolicy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order = content.clone();
            order.shuffle(&mut rng);
            order.truncate(take);
            order
        }
    };
    MaskedView::new(text.tokens().to_vec(), &chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_tokens(s.split_whitespace())
    }

    #[test]
    fn single_winner_masked() {
        let stats = CorpusStats::with_doc_freq(10, &[("budget", 1), ("council", 9), ("plan", 9)]);
        let v = mask_by_tfidf(&seq("the council budget plan"), &stats, 0.2, 0, MaskPolicy::Tfidf).unwrap();
        assert_eq!(v.masked_count(), 1);
        assert_eq!(v.spans()[0], AnswerSpan { start: 2, tokens: vec!["budget".into()] });
        assert_eq!(v.slots(), ["the", "council", MASK_TOKEN, "plan"]);
    }

    #[test]
    fn punctuation_only_is_an_error() {
        let stats = CorpusStats::default();
        assert_eq!(
            mask_by_tfidf(&seq(", . !"), &stats, 0.25, 0, MaskPolicy::Tfidf),
            Err(CriticError::NothingToMask)
        );
    }

    #[test]
    fn twelve_token_fixture() {
        // N = 9, idf = ln(10 / (1 + df)). Content tokens and scores (tf = 1):
        // budget df1 1.609 | signed df2 1.204 | taxes df2 1.204 | bill df3 0.916
        // mayor df4 0.693 | city df5 0.511 | vote df6 0.357 | rose df7 0.223 | delay df8 0.105
        // 9 content tokens * 0.25 -> 3 masked; signed beats taxes on position.
        let stats = CorpusStats::with_doc_freq(
            9,
            &[
                ("mayor", 4),
                ("signed", 2),
                ("budget", 1),
                ("bill", 3),
                ("city", 5),
                ("taxes", 2),
                ("rose", 7),
                ("vote", 6),
                ("delay", 8),
            ],
        );
        let text = seq("mayor signed budget bill , city taxes rose after vote delay .");
        assert_eq!(text.len(), 12);
        let v = mask_by_tfidf(&text, &stats, 0.25, 7, MaskPolicy::Tfidf).unwrap();
        let masked: Vec<&str> = (0..text.len()).filter(|&i| v.is_masked(i)).map(|i| v.token(i)).collect();
        assert_eq!(masked, ["signed", "budget", "taxes"]);
        assert_eq!(v.spans().len(), 2);
        // the seed only matters for the random policy
        assert_eq!(mask_by_tfidf(&text, &stats, 0.25, 99, MaskPolicy::Tfidf).unwrap(), v);
    }

    #[test]
    fn adjacent_masks_merge() {
        let v = MaskedView::new(seq("a b c d").into_tokens(), &[2, 1]).unwrap();
        assert_eq!(v.spans(), [AnswerSpan { start: 1, tokens: vec!["b".into(), "c".into()] }]);
        assert_eq!(v.fraction(), 0.5);
    }

    #[test]
    fn wire_round_trip() {
        let v = MaskedView::new(seq("a b c d e").into_tokens(), &[0, 3]).unwrap();
        let back = MaskedView::from_parts(&v.slots(), v.spans().to_vec()).unwrap();
        assert_eq!(back, v);
        assert!(MaskedView::from_parts(&v.slots(), vec![]).is_err());
    }

    proptest! {
        #[test]
        fn answers_restore_original(words in proptest::collection::vec("[a-e]{1,3}|,|\\.", 1..30), frac in 0.05f64..0.95, seed in 0u64..50) {
            let text = TokenSeq::from_tokens(words.clone());
            for policy in [MaskPolicy::Tfidf, MaskPolicy::Random] {
                let stats = CorpusStats::build([&text]);
                match mask_by_tfidf(&text, &stats, frac, seed, policy) {
                    Ok(v) => {
                        prop_assert_eq!(v.restore(), words.clone());
                        prop_assert!(v.fraction() > 0.0 && v.fraction() <= 1.0);
                        let again = mask_by_tfidf(&text, &stats, frac, seed, policy).unwrap();
                        prop_assert_eq!(again, v.clone());
                        for w in v.spans().windows(2) {
                            prop_assert!(w[0].start + w[0].tokens.len() < w[1].start);
                        }
                    }
                    Err(e) => prop_assert_eq!(e, CriticError::NothingToMask),
                }
            }
        }
    }
}
