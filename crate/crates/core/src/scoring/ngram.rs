use std::path::Path;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{CausalScorer, InfillScorer, LogDist, ScoreError, TokenId, Vocab};
use crate::critics::MaskedView;
use crate::num::Real;
use crate::text::{is_content_token, TokenSeq};

pub const ARTIFACT_FORMAT: &str = "pmidistill-ngram";
pub const ARTIFACT_VERSION: u32 = 1;
const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub order: usize,
    /// Add-k constant.
    pub smoothing: f64,
    /// Pull of the smoothing mass toward words already in the history.
    /// Zero gives plain add-k estimates.
    pub cache_weight: f64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self { order: 3, smoothing: 0.1, cache_weight: 0.0 }
    }
}

impl NgramConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(ScoreError::InvalidConfig(format!("order {} outside 1..={MAX_ORDER}", self.order)));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(ScoreError::InvalidConfig(format!("smoothing {} must be positive", self.smoothing)));
        }
        if !(self.cache_weight >= 0.0 && self.cache_weight.is_finite()) {
            return Err(ScoreError::InvalidConfig(format!(
                "cache_weight {} must be non-negative",
                self.cache_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Successors {
    total: u64,
    next: FxHashMap<TokenId, u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct CountTable {
    contexts: FxHashMap<Vec<TokenId>, Successors>,
}

impl CountTable {
    fn add(&mut self, ctx: &[TokenId], tok: TokenId, weight: u64) {
        let s = match self.contexts.get_mut(ctx) {
            Some(s) => s,
            None => self.contexts.entry(ctx.to_vec()).or_default(),
        };
        s.total += weight;
        *s.next.entry(tok).or_insert(0) += weight;
    }
}

/// Unigram counts of the content tokens seen so far.
#[derive(Debug, Clone)]
struct Cache {
    counts: Vec<u64>,
    /// Ids with a nonzero count.
    seen: Vec<TokenId>,
    total: u64,
}

impl Cache {
    fn from_ids(ids: &[TokenId], cacheable: &[bool]) -> Self {
        let mut c = Self { counts: vec![0; cacheable.len()], seen: Vec::new(), total: 0 };
        for &t in ids {
            c.push(t, cacheable);
        }
        c
    }

    fn push(&mut self, t: TokenId, cacheable: &[bool]) {
        if cacheable[t as usize] {
            if self.counts[t as usize] == 0 {
                self.seen.push(t);
            }
            self.counts[t as usize] += 1;
            self.total += 1;
        }
    }

    fn count(&self, t: TokenId) -> u64 {
        self.counts[t as usize]
    }
}

/// Add-k smoothed n-gram model with forward and backward count tables.
///
/// `p(t | ctx) = a(t) (1 + b h(t)) / Z` where `a(t) = (c(ctx, t) + k) / (c(ctx) + k|V|)`
/// is the add-k estimate, `h` counts content tokens in the visible history,
/// `b` is the cache weight and `Z = 1 + b sum_t a(t) h(t)`. With `b = 0` this
/// is plain add-k. Infill scores each hidden token as the mean of its forward and
/// backward probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramBackend {
    config: NgramConfig,
    vocab: Arc<Vocab>,
    forward: CountTable,
    backward: CountTable,
    cacheable: Vec<bool>,
}

fn cacheable(vocab: &Vocab) -> Vec<bool> {
    (0..vocab.len() as TokenId)
        .map(|t| !Vocab::is_reserved(t) && is_content_token(vocab.token(t)))
        .collect()
}

pub fn train_ngram(corpus: &[TokenSeq], order: usize, smoothing: f64) -> Result<NgramBackend, ScoreError> {
    NgramBackend::train(corpus, NgramConfig { order, smoothing, cache_weight: 0.0 })
}

impl NgramBackend {
    /// Vocabulary from the corpus plus reserved symbols; counts from every
    /// document.
    pub fn train(corpus: &[TokenSeq], config: NgramConfig) -> Result<Self, ScoreError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(ScoreError::EmptyCorpus);
        }
        let vocab = Arc::new(Vocab::from_words(corpus.iter().flat_map(|d| d.iter())));
        let mut backend = Self::untrained(vocab, config)?;
        for doc in corpus {
            backend.add_document(doc.tokens(), 1);
        }
        Ok(backend)
    }

    /// No counts: every distribution is uniform.
    pub fn untrained(vocab: Arc<Vocab>, config: NgramConfig) -> Result<Self, ScoreError> {
        config.validate()?;
        Ok(Self { config, cacheable: cacheable(&vocab), vocab, forward: CountTable::default(), backward: CountTable::default() })
    }

    pub fn config(&self) -> &NgramConfig {
        &self.config
    }

    pub fn with_cache_weight(mut self, cache_weight: f64) -> Result<Self, ScoreError> {
        self.config.cache_weight = cache_weight;
        self.config.validate()?;
        Ok(self)
    }

    /// Adds `weight` copies of `doc` to both tables. Unknown words count as
    /// the unknown symbol; the vocabulary never grows.
    pub fn add_document<S: AsRef<str>>(&mut self, doc: &[S], weight: u64) {
        let mut ids = self.vocab.encode(doc);
        ids.push(Vocab::EOD_ID);
        Self::count_into(&mut self.forward, self.config.order, &ids, weight);
        ids.pop();
        ids.reverse();
        ids.push(Vocab::EOD_ID);
        Self::count_into(&mut self.backward, self.config.order, &ids, weight);
    }

    /// A copy with `docs` added; `self` is untouched.
    pub fn with_documents<S: AsRef<str>>(&self, docs: &[Vec<S>], weight: u64) -> Self {
        let mut next = self.clone();
        for d in docs {
            next.add_document(d, weight);
        }
        next
    }

    fn count_into(table: &mut CountTable, order: usize, ids: &[TokenId], weight: u64) {
        let mut buf = [Vocab::BOS_ID; MAX_ORDER];
        for i in 0..ids.len() {
            let ctx = context_key(order, &ids[..i], &mut buf);
            table.add(ctx, ids[i], weight);
        }
    }

    fn addk<F: Real>(&self, c: u64, total: u64) -> F {
        let k = F::lit(self.config.smoothing);
        (F::from_count(c) + k) / (F::from_count(total) + k * F::from_count(self.vocab.len() as u64))
    }

    /// `Z` in closed form: `sum_t a(t) h(t) = (sum_t c(ctx, t) h(t) + k H) / (c(ctx) + k|V|)`
    /// with `H` the cache size. The integer sum runs over the smaller of the
    /// successor map and the cache.
    fn normalizer<F: Real>(&self, succ: Option<&Successors>, cache: &Cache) -> F {
        let b = F::lit(self.config.cache_weight);
        let k = F::lit(self.config.smoothing);
        let (total, hits) = match succ {
            None => (0, 0),
            Some(s) if s.next.len() <= cache.seen.len() => {
                (s.total, s.next.iter().map(|(&t, &c)| c * cache.count(t)).sum::<u64>())
            }
            Some(s) => {
                let hits = cache.seen.iter().map(|t| s.next.get(t).copied().unwrap_or(0) * cache.count(*t)).sum();
                (s.total, hits)
            }
        };
        let acc = (F::from_count(hits) + k * F::from_count(cache.total))
            / (F::from_count(total) + k * F::from_count(self.vocab.len() as u64));
        F::one() + b * acc
    }

    fn prob<F: Real>(&self, table: &CountTable, history: &[TokenId], tok: TokenId, cache: &Cache) -> F {
        let mut buf = [Vocab::BOS_ID; MAX_ORDER];
        let succ = table.contexts.get(context_key(self.config.order, history, &mut buf));
        let total = succ.map_or(0, |s| s.total);
        let c = succ.and_then(|s| s.next.get(&tok).copied()).unwrap_or(0);
        let b = F::lit(self.config.cache_weight);
        let boost = F::one() + b * F::from_count(cache.count(tok));
        self.addk::<F>(c, total) * boost / self.normalizer(succ, cache)
    }

    fn dense<F: Real>(&self, table: &CountTable, history: &[TokenId], cache: &Cache) -> Vec<F> {
        let mut buf = [Vocab::BOS_ID; MAX_ORDER];
        let succ = table.contexts.get(context_key(self.config.order, history, &mut buf));
        let total = succ.map_or(0, |s| s.total);
        let mut counts = vec![0u64; self.vocab.len()];
        if let Some(s) = succ {
            for (&t, &c) in &s.next {
                counts[t as usize] = c;
            }
        }
        let b = F::lit(self.config.cache_weight);
        let z = self.normalizer::<F>(succ, cache);
        counts
            .iter()
            .zip(&cache.counts)
            .map(|(&c, &h)| (self.addk::<F>(c, total) * (F::one() + b * F::from_count(h)) / z).ln())
            .collect()
    }

    fn infill<F: Real>(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<F, ScoreError> {
        if masked.spans().is_empty() {
            return Err(ScoreError::NoMaskedSpans);
        }
        let cond: Vec<TokenId> = condition.map(|c| self.vocab.encode(c)).unwrap_or_default();
        let n = masked.len();
        let answers: Vec<TokenId> = (0..n).map(|i| self.vocab.id(masked.token(i))).collect();
        let slots: Vec<TokenId> =
            (0..n).map(|i| if masked.is_masked(i) { Vocab::MASK_ID } else { answers[i] }).collect();

        let mut left = vec![F::zero(); n];
        let mut history = cond.clone();
        if !cond.is_empty() {
            history.push(Vocab::SEP_ID);
        }
        let mut cache = Cache::from_ids(&cond, &self.cacheable);
        for i in 0..n {
            if masked.is_masked(i) {
                left[i] = self.prob(&self.forward, &history, answers[i], &cache);
            } else {
                cache.push(slots[i], &self.cacheable);
            }
            history.push(slots[i]);
        }

        let mut right = vec![F::zero(); n];
        let mut history = Vec::with_capacity(n);
        let mut cache = Cache::from_ids(&cond, &self.cacheable);
        for i in (0..n).rev() {
            if masked.is_masked(i) {
                right[i] = self.prob(&self.backward, &history, answers[i], &cache);
            } else {
                cache.push(slots[i], &self.cacheable);
            }
            history.push(slots[i]);
        }

        let half = F::lit(0.5);
        let mut total = F::zero();
        for i in (0..n).filter(|&i| masked.is_masked(i)) {
            total = total + (half * (left[i] + right[i])).ln();
        }
        Ok(total)
    }

    pub fn to_json(&self) -> String {
        let table = |t: &CountTable| {
            let mut rows: Vec<ContextRow> = t
                .contexts
                .iter()
                .map(|(ctx, s)| {
                    let mut next: Vec<(TokenId, u64)> = s.next.iter().map(|(&a, &b)| (a, b)).collect();
                    next.sort_unstable();
                    ContextRow { context: ctx.clone(), next }
                })
                .collect();
            rows.sort_by(|a, b| a.context.cmp(&b.context));
            rows
        };
        let art = Artifact {
            format: ARTIFACT_FORMAT.to_string(),
            version: ARTIFACT_VERSION,
            config: self.config,
            vocab: self.vocab.tokens().to_vec(),
            forward: table(&self.forward),
            backward: table(&self.backward),
        };
        serde_json::to_string(&art).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScoreError> {
        let art: Artifact = serde_json::from_str(text).map_err(|e| ScoreError::Artifact(e.to_string()))?;
        if art.format != ARTIFACT_FORMAT || art.version != ARTIFACT_VERSION {
            return Err(ScoreError::Artifact(format!(
                "unsupported artifact {} v{}",
                art.format, art.version
            )));
        }
        art.config.validate()?;
        if art.vocab.len() < Vocab::RESERVED.len()
            || art.vocab.iter().zip(Vocab::RESERVED).any(|(a, b)| a != b)
        {
            return Err(ScoreError::Artifact("vocabulary must begin with the reserved symbols".into()));
        }
        let vocab = Arc::new(Vocab::from_ordered(&art.vocab).map_err(|e| ScoreError::Artifact(e.to_string()))?);
        let v = vocab.len() as TokenId;
        let table = |rows: Vec<ContextRow>| -> Result<CountTable, ScoreError> {
            let mut t = CountTable::default();
            for row in rows {
                if row.context.len() + 1 != art.config.order || row.context.iter().any(|&c| c >= v) {
                    return Err(ScoreError::Artifact("malformed context".into()));
                }
                for (tok, c) in row.next {
                    if tok >= v || c == 0 {
                        return Err(ScoreError::Artifact("malformed successor".into()));
                    }
                    t.add(&row.context, tok, c);
                }
            }
            Ok(t)
        };
        let forward = table(art.forward)?;
        let backward = table(art.backward)?;
        Ok(Self { config: art.config, cacheable: cacheable(&vocab), vocab, forward, backward })
    }

    pub fn save(&self, path: &Path) -> Result<(), ScoreError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScoreError::Artifact(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Artifact(e.to_string()))?;
        Self::from_json(&text)
    }
}

/// The last `order - 1` ids of `history` after any `<sep>`, left-padded
/// with `<s>`.
fn context_key<'a>(order: usize, history: &[TokenId], buf: &'a mut [TokenId; MAX_ORDER]) -> &'a [TokenId] {
    let width = order - 1;
    let mut have = history.len().min(width);
    if let Some(p) = history[history.len() - have..].iter().rposition(|&t| t == Vocab::SEP_ID) {
        have -= p + 1;
    }
    let pad = width - have;
    buf[..pad].fill(Vocab::BOS_ID);
    buf[pad..width].copy_from_slice(&history[history.len() - have..]);
    &buf[..width]
}

#[derive(Serialize, Deserialize)]
struct ContextRow {
    context: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    format: String,
    version: u32,
    config: NgramConfig,
    vocab: Vec<String>,
    forward: Vec<ContextRow>,
    backward: Vec<ContextRow>,
}

impl<F: Real> CausalScorer<F> for NgramBackend {
    fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    fn next_token_distribution(&self, context: &[TokenId]) -> Result<LogDist<F>, ScoreError> {
        let cache = Cache::from_ids(context, &self.cacheable);
        LogDist::new(self.vocab.clone(), self.dense(&self.forward, context, &cache))
    }

    fn sequence_logprob(&self, context: &[TokenId], continuation: &[TokenId]) -> Result<F, ScoreError> {
        if continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        let mut history = context.to_vec();
        let mut cache = Cache::from_ids(context, &self.cacheable);
        let mut total = F::zero();
        for &tok in continuation {
            let p: F = self.prob(&self.forward, &history, tok, &cache);
            total = total + p.ln();
            history.push(tok);
            cache.push(tok, &self.cacheable);
        }
        Ok(total)
    }
}

impl<F: Real> InfillScorer<F> for NgramBackend {
    fn infill_logprob(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<F, ScoreError> {
        self.infill(masked, condition)
    }
}
