use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use super::TokenSeq;
use crate::num::Real;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        BUNDLED_STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// A token that carries content: contains an alphanumeric character and is
/// not a stop word.
pub fn is_content_token(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric) && !is_stopword(token)
}

/// Document-frequency and n-gram tables over a reference corpus.
///
/// Built once, then shared read-only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    doc_freq: HashMap<String, u64>,
    total_docs: u64,
    bigrams: HashMap<[String; 2], u64>,
    trigrams: HashMap<[String; 3], u64>,
}

impl CorpusStats {
    pub fn build<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut stats = Self::default();
        for doc in docs {
            stats.add_document(doc);
        }
        stats
    }

    pub fn add_document(&mut self, doc: &TokenSeq) {
        self.total_docs += 1;
        let unique: HashSet<&str> = doc.iter().collect();
        for t in unique {
            *self.doc_freq.entry(t.to_string()).or_default() += 1;
        }
        for w in doc.tokens().windows(2) {
            *self.bigrams.entry([w[0].clone(), w[1].clone()]).or_default() += 1;
        }
        for w in doc.tokens().windows(3) {
            *self
                .trigrams
                .entry([w[0].clone(), w[1].clone(), w[2].clone()])
                .or_default() += 1;
        }
    }

    /// Inserts a document-frequency entry directly; used to pin fixtures.
    pub fn with_doc_freq(total_docs: u64, table: &[(&str, u64)]) -> Self {
        Self {
            total_docs,
            doc_freq: table.iter().map(|&(t, n)| (t.to_string(), n.min(total_docs))).collect(),
            ..Self::default()
        }
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn doc_freq(&self, token: &str) -> u64 {
        self.doc_freq.get(token).copied().unwrap_or(0)
    }

    pub fn bigram_freq(&self, a: &str, b: &str) -> u64 {
        self.bigrams
            .get(&[a.to_string(), b.to_string()])
            .copied()
            .unwrap_or(0)
    }

    pub fn trigram_freq(&self, a: &str, b: &str, c: &str) -> u64 {
        self.trigrams
            .get(&[a.to_string(), b.to_string(), c.to_string()])
            .copied()
            .unwrap_or(0)
    }

    /// `ln((1 + N) / (1 + df))`.
    pub fn idf<F: Real>(&self, token: &str) -> F {
        let n = F::lit((1 + self.total_docs) as f64);
        let df = F::lit((1 + self.doc_freq(token)) as f64);
        (n / df).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTerm<F> {
    pub term: String,
    pub score: F,
    /// Position of the term's first occurrence in the document.
    pub first: usize,
    pub tf: u64,
}

/// Distinct tokens of `doc` by descending `tf * idf`; ties keep first
/// occurrence order.
pub fn tfidf_rank<F: Real>(doc: &TokenSeq, stats: &CorpusStats) -> Vec<ScoredTerm<F>> {
    let mut order: Vec<&str> = Vec::new();
    let mut tf: HashMap<&str, (u64, usize)> = HashMap::new();
    for (i, t) in doc.iter().enumerate() {
        tf.entry(t)
            .and_modify(|e| e.0 += 1)
            .or_insert_with(|| {
                order.push(t);
                (1, i)
            });
    }
    let mut ranked: Vec<ScoredTerm<F>> = order
        .into_iter()
        .map(|t| {
            let (count, first) = tf[t];
            ScoredTerm {
                term: t.to_string(),
                score: F::lit(count as f64) * stats.idf::<F>(t),
                first,
                tf: count,
            }
        })
        .collect();
    // stable sort keeps first-occurrence order among equal scores
    ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    ranked
}
