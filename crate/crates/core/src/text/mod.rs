//! Deterministic text primitives shared by every stage.

mod diversity;
mod overlap;
mod pos;
mod sentence;
mod tfidf;
mod tokenize;

pub use diversity::{msttr, ngram_entropy, DEFAULT_MSTTR_WINDOW};
pub use overlap::ngram_precision;
pub use pos::{pos_counts, Pos, PosCounts, ReferenceTagger, Tagger};
pub use sentence::{split_sentences, SentenceSplitter};
pub use tfidf::{is_content_token, is_stopword, tfidf_rank, CorpusStats, ScoredTerm};
pub use tokenize::{detokenize, tokenize, TokenSeq};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("no {order}-grams in corpus; entropy is undefined")]
    EmptyNgramPool { order: usize },
    #[error("corpus has {available} tokens, fewer than one window of {window}")]
    InsufficientTokens { available: usize, window: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
