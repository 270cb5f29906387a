use std::sync::Arc;

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use super::ScoreError;
use crate::num::{log_sum_exp, Real};

pub type TokenId = u32;

/// Closed vocabulary. Ids `0..5` are reserved symbols; word tokens follow.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: FxHashMap<String, TokenId>,
    fingerprint: [u8; 16],
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint && self.tokens == other.tokens
    }
}

impl Vocab {
    pub const BOS: &'static str = "<s>";
    pub const EOD: &'static str = "</d>";
    pub const UNK: &'static str = "<unk>";
    pub const SEP: &'static str = "<sep>";
    pub const MASK: &'static str = crate::critics::MASK_TOKEN;

    pub const BOS_ID: TokenId = 0;
    pub const EOD_ID: TokenId = 1;
    pub const UNK_ID: TokenId = 2;
    pub const SEP_ID: TokenId = 3;
    pub const MASK_ID: TokenId = 4;
    pub const RESERVED: [&'static str; 5] = [Self::BOS, Self::EOD, Self::UNK, Self::SEP, Self::MASK];

    /// Reserved symbols followed by the distinct `words` in sorted order.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut words: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_string())
            .filter(|w| !Self::RESERVED.contains(&w.as_str()))
            .collect();
        words.sort();
        words.dedup();
        let tokens = Self::RESERVED.iter().map(|s| s.to_string()).chain(words).collect();
        Self::build(tokens)
    }

    /// Keeps the given order; reserved symbols are moved to the front.
    pub fn from_ordered<I, S>(tokens: I) -> Result<Self, ScoreError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        for t in tokens {
            let t = t.as_ref();
            if !seen.insert(t.to_string()) {
                return Err(ScoreError::Data(format!("duplicate vocabulary entry `{t}`")));
            }
            if !Self::RESERVED.contains(&t) {
                words.push(t.to_string());
            }
        }
        let tokens = Self::RESERVED.iter().map(|s| s.to_string()).chain(words).collect();
        Ok(Self::build(tokens))
    }

    fn build(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        let mut hasher = Sha256::new();
        for t in &tokens {
            hasher.update(t.as_bytes());
            hasher.update([0u8]);
        }
        let mut fingerprint = [0u8; 16];
        fingerprint.copy_from_slice(&hasher.finalize()[..16]);
        Self { tokens, index, fingerprint }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Id of `token`, the unknown symbol when absent.
    pub fn id(&self, token: &str) -> TokenId {
        self.get(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn is_reserved(id: TokenId) -> bool {
        (id as usize) < Self::RESERVED.len()
    }

    /// Tokens a generator may emit: words and the end-of-document symbol.
    pub fn is_emittable(id: TokenId) -> bool {
        id == Self::EOD_ID || !Self::is_reserved(id)
    }

    pub fn fingerprint(&self) -> [u8; 16] {
        self.fingerprint
    }
}

/// A normalized distribution over a vocabulary, in natural-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDist<F> {
    vocab: Arc<Vocab>,
    logp: Vec<F>,
}

impl<F: Real> LogDist<F> {
    /// Wraps log-probabilities that are already normalized.
    pub fn new(vocab: Arc<Vocab>, logp: Vec<F>) -> Result<Self, ScoreError> {
        if logp.len() != vocab.len() {
            return Err(ScoreError::Data(format!(
                "distribution has {} entries for a vocabulary of {}",
                logp.len(),
                vocab.len()
            )));
        }
        Ok(Self { vocab, logp })
    }

    /// Normalizes arbitrary log-weights (log-softmax).
    pub fn from_log_weights(vocab: Arc<Vocab>, weights: Vec<F>) -> Result<Self, ScoreError> {
        let z = log_sum_exp(&weights);
        if !z.is_finite() {
            return Err(ScoreError::Data("log-weights do not normalize".into()));
        }
        Self::new(vocab, weights.into_iter().map(|w| w - z).collect())
    }

    pub fn uniform(vocab: Arc<Vocab>) -> Self {
        let lp = -F::lit(vocab.len() as f64).ln();
        let n = vocab.len();
        Self { vocab, logp: vec![lp; n] }
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn logp(&self, id: TokenId) -> F {
        self.logp[id as usize]
    }

    pub fn prob(&self, id: TokenId) -> F {
        self.logp[id as usize].exp()
    }

    pub fn values(&self) -> &[F] {
        &self.logp
    }

    pub fn len(&self) -> usize {
        self.logp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logp.is_empty()
    }

    pub fn total_mass(&self) -> F {
        self.logp.iter().map(|l| l.exp()).sum()
    }

    pub fn same_vocab(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.vocab, &other.vocab) || *self.vocab == *other.vocab
    }
}
