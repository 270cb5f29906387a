#![allow(dead_code)]

pub mod oracle;
pub mod pipeline;
pub mod shim;

use pmidistill::scoring::{NgramBackend, NgramConfig};
use pmidistill::synth::{bundled_corpus, CRITIC_NGRAM};
use pmidistill::text::{split_sentences, tokenize, CorpusStats, TokenSeq};

pub fn corpus() -> Vec<TokenSeq> {
    bundled_corpus().into_iter().map(tokenize).collect()
}

pub fn critic(corpus: &[TokenSeq]) -> NgramBackend {
    NgramBackend::train(corpus, CRITIC_NGRAM).unwrap()
}

pub fn critic_with(corpus: &[TokenSeq], cfg: NgramConfig) -> NgramBackend {
    NgramBackend::train(corpus, cfg).unwrap()
}

pub fn stats(corpus: &[TokenSeq]) -> CorpusStats {
    CorpusStats::build(corpus.iter())
}

fn sentences(doc: &str) -> Vec<&str> {
    split_sentences(doc).into_iter().map(|r| &doc[r]).collect()
}

/// 200 (document, summary) pairs drawn from the bundled corpus: leads,
/// two-sentence leads, inner sentences and summaries of other documents,
/// over long and short documents alike.
pub fn critic_pairs() -> Vec<(String, String)> {
    let docs = bundled_corpus();
    let long: Vec<&str> = docs.iter().copied().filter(|d| sentences(d).len() >= 8).collect();
    let short: Vec<&str> = docs.iter().copied().filter(|d| sentences(d).len() <= 2).collect();
    assert!(long.len() >= 50 && short.len() >= 50);
    (0..200)
        .map(|i| {
            let doc = if i % 5 == 4 { short[i] } else { long[i % long.len()] };
            let s = sentences(doc);
            let summary = match i % 4 {
                0 => s[0].to_string(),
                1 => sentences(long[(i + 7) % long.len()])[0].to_string(),
                2 => s[s.len() / 2].to_string(),
                _ => s[..s.len().min(2)].join(" "),
            };
            (doc.to_string(), summary)
        })
        .collect()
}
