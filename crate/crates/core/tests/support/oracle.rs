//! Brute-force reference for the critics, written against strings only.
//!
//! Nothing here goes through the library's vocabulary, count tables, cache
//! or masking code; only tokenization is shared.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const BOS: &str = "<s>";
const EOD: &str = "</d>";
const UNK: &str = "<unk>";
const SEP: &str = "<sep>";
const MASK: &str = "<mask>";
const RESERVED: usize = 5;

pub struct OracleLm {
    order: usize,
    k: f64,
    b: f64,
    words: BTreeSet<String>,
    stop: HashSet<&'static str>,
    forward: HashMap<Vec<String>, BTreeMap<String, u64>>,
    backward: HashMap<Vec<String>, BTreeMap<String, u64>>,
    doc_freq: HashMap<String, u64>,
    docs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleVerdict {
    pub pmi_s: f64,
    pub pmi_f: f64,
    pub compression: f64,
    pub pass_s: bool,
    pub pass_f: bool,
    pub pass_b: bool,
}

impl OracleVerdict {
    pub fn pass_all(&self) -> bool {
        self.pass_s && self.pass_f && self.pass_b
    }
}

pub struct Thresholds {
    pub tau_s: f64,
    pub tau_f: f64,
    pub tau_b: f64,
    pub fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tau_s: 14f64.ln(), tau_f: 1.7f64.ln(), tau_b: 0.2, fraction: 0.25 }
    }
}

fn tally(table: &mut HashMap<Vec<String>, BTreeMap<String, u64>>, order: usize, seq: &[String]) {
    for i in 0..seq.len() {
        let mut ctx = vec![BOS.to_string(); order - 1];
        for (j, slot) in ctx.iter_mut().enumerate() {
            let back = order - 1 - j;
            if i >= back {
                *slot = seq[i - back].clone();
            }
        }
        *table.entry(ctx).or_default().entry(seq[i].clone()).or_default() += 1;
    }
}

impl OracleLm {
    pub fn new(corpus: &[Vec<String>], order: usize, k: f64, b: f64) -> Self {
        let mut lm = Self {
            order,
            k,
            b,
            words: corpus.iter().flatten().cloned().collect(),
            stop: STOPWORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect(),
            forward: HashMap::new(),
            backward: HashMap::new(),
            doc_freq: HashMap::new(),
            docs: corpus.len() as u64,
        };
        for doc in corpus {
            let mut f = doc.clone();
            f.push(EOD.into());
            tally(&mut lm.forward, order, &f);
            let mut r: Vec<String> = doc.iter().rev().cloned().collect();
            r.push(EOD.into());
            tally(&mut lm.backward, order, &r);
            for w in doc.iter().collect::<HashSet<_>>() {
                *lm.doc_freq.entry(w.clone()).or_default() += 1;
            }
        }
        lm
    }

    fn content(&self, t: &str) -> bool {
        t.chars().any(char::is_alphanumeric) && !self.stop.contains(t)
    }

    fn known(&self, t: &str) -> String {
        if self.words.contains(t) {
            t.to_string()
        } else {
            UNK.to_string()
        }
    }

    fn cacheable(&self, t: &str) -> bool {
        self.words.contains(t) && self.content(t)
    }

    fn add_k(&self, succ: Option<&BTreeMap<String, u64>>, t: &str) -> f64 {
        let total: u64 = succ.map_or(0, |s| s.values().sum());
        let c = succ.and_then(|s| s.get(t)).copied().unwrap_or(0);
        let v = (self.words.len() + RESERVED) as f64;
        (c as f64 + self.k) / (total as f64 + self.k * v)
    }

    fn prob(
        &self,
        table: &HashMap<Vec<String>, BTreeMap<String, u64>>,
        history: &[String],
        tok: &str,
        cache: &BTreeMap<String, u64>,
    ) -> f64 {
        let start = history.iter().rposition(|t| t == SEP).map_or(0, |p| p + 1);
        let visible = &history[start..];
        let width = self.order - 1;
        let mut ctx = vec![BOS.to_string(); width];
        let have = visible.len().min(width);
        ctx[width - have..].clone_from_slice(&visible[visible.len() - have..]);
        let succ = table.get(&ctx);
        let z = 1.0 + self.b * cache.iter().map(|(t, &h)| self.add_k(succ, t) * h as f64).sum::<f64>();
        let h = cache.get(tok).copied().unwrap_or(0) as f64;
        self.add_k(succ, tok) * (1.0 + self.b * h) / z
    }

    /// Log-probability of the tokens at `hidden` positions of `text`.
    pub fn infill(&self, text: &[String], hidden: &BTreeSet<usize>, condition: Option<&[String]>) -> f64 {
        let cond: Vec<String> = condition.unwrap_or(&[]).iter().map(|t| self.known(t)).collect();
        let slot = |i: usize| if hidden.contains(&i) { MASK.to_string() } else { self.known(&text[i]) };
        let seed_cache = || {
            let mut c: BTreeMap<String, u64> = BTreeMap::new();
            for t in cond.iter().filter(|t| self.cacheable(t)) {
                *c.entry(t.clone()).or_default() += 1;
            }
            c
        };
        let mut total = 0.0;
        for &i in hidden {
            let answer = self.known(&text[i]);

            let mut history = cond.clone();
            if !cond.is_empty() {
                history.push(SEP.into());
            }
            let mut cache = seed_cache();
            for j in 0..i {
                history.push(slot(j));
                if !hidden.contains(&j) && self.cacheable(&text[j]) {
                    *cache.entry(text[j].clone()).or_default() += 1;
                }
            }
            let left = self.prob(&self.forward, &history, &answer, &cache);

            let mut history = Vec::new();
            let mut cache = seed_cache();
            for j in (i + 1..text.len()).rev() {
                history.push(slot(j));
                if !hidden.contains(&j) && self.cacheable(&text[j]) {
                    *cache.entry(text[j].clone()).or_default() += 1;
                }
            }
            let right = self.prob(&self.backward, &history, &answer, &cache);
            total += (0.5 * (left + right)).ln();
        }
        total
    }

    /// Highest `tf * ln((1 + N) / (1 + df))` content positions, ties by
    /// position.
    pub fn mask(&self, text: &[String], fraction: f64) -> BTreeSet<usize> {
        let mut tf: HashMap<&str, u64> = HashMap::new();
        for t in text {
            *tf.entry(t).or_default() += 1;
        }
        let score = |t: &str| {
            let df = self.doc_freq.get(t).copied().unwrap_or(0);
            tf[t] as f64 * ((1 + self.docs) as f64 / (1 + df) as f64).ln()
        };
        let mut content: Vec<usize> = (0..text.len()).filter(|&i| self.content(&text[i])).collect();
        assert!(!content.is_empty(), "fixture text without content tokens");
        content.sort_by(|&a, &b| score(&text[b]).partial_cmp(&score(&text[a])).unwrap().then(a.cmp(&b)));
        let take = ((fraction * content.len() as f64).ceil() as usize).clamp(1, content.len());
        content.into_iter().take(take).collect()
    }

    pub fn pmi(&self, target: &[String], condition: &[String], fraction: f64) -> f64 {
        let hidden = self.mask(target, fraction);
        self.infill(target, &hidden, Some(condition)) - self.infill(target, &hidden, None)
    }

    pub fn verdict(&self, x: &[String], y: &[String], th: &Thresholds) -> OracleVerdict {
        let compression = y.len() as f64 / x.len() as f64;
        let pmi_s = self.pmi(x, y, th.fraction);
        let pmi_f = self.pmi(y, x, th.fraction);
        OracleVerdict {
            pmi_s,
            pmi_f,
            compression,
            pass_s: pmi_s > th.tau_s * compression,
            pass_f: pmi_f > th.tau_f,
            pass_b: compression < th.tau_b,
        }
    }
}
