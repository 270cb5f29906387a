//! Control-attribute annotation: metrics, threshold buckets, keywords,
//! instruction rendering, style buckets and control correlation.

mod correlation;
mod metrics;

pub use correlation::{control_correlation, Attribute, CcSample};
pub use metrics::{m_ext, m_len, m_spe, specificity};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::text::{is_content_token, tfidf_rank, CorpusStats, Tagger, TokenSeq};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("summary has no sentences")]
    NoSentences,
    #[error("document is empty")]
    EmptyDocument,
    #[error("summary has no content tokens")]
    NoKeywords,
    #[error("control values are equal; distance is zero")]
    ZeroDistance,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("unknown control value `{0}`")]
    UnknownValue(String),
    #[error("no samples")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthBucket {
    Short,
    Medium,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtBucket {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecBucket {
    Medium,
    High,
}

impl LengthBucket {
    pub const ALL: [Self; 3] = [Self::Short, Self::Medium, Self::Long];
    pub fn name(self) -> &'static str {
        match self {
            Self::Short => "short",
            Self::Medium => "medium",
            Self::Long => "long",
        }
    }
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl ExtBucket {
    pub const ALL: [Self; 3] = [Self::Low, Self::Medium, Self::High];
    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl SpecBucket {
    pub const ALL: [Self; 2] = [Self::Medium, Self::High];
    pub fn name(self) -> &'static str {
        match self {
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
    /// Medium sits at level 1, matching the other attributes' medium.
    pub fn level(self) -> u8 {
        self as u8 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlThresholds<S> {
    pub len_low: S,
    pub len_high: S,
    pub ext_low: S,
    pub ext_high: S,
    pub spec_high: S,
}

impl<S: Scalar> Default for ControlThresholds<S> {
    fn default() -> Self {
        Self {
            len_low: S::from_count(38),
            len_high: S::from_count(69),
            ext_low: S::ratio(34, 100),
            ext_high: S::ratio(51, 100),
            spec_high: S::ratio(48, 10),
        }
    }
}

impl<S: Scalar> ControlThresholds<S> {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.len_low < self.len_high) {
            return Err(ControlError::InvalidThresholds("length thresholds must increase".into()));
        }
        if !(self.ext_low < self.ext_high) {
            return Err(ControlError::InvalidThresholds("extractiveness thresholds must increase".into()));
        }
        Ok(())
    }
}

fn three_way<S: PartialOrd>(v: &S, low: &S, high: &S) -> u8 {
    if v < low {
        0
    } else if v < high {
        1
    } else {
        2
    }
}

/// Buckets raw metric values; each upper bucket includes its threshold.
pub fn bucketize<S: Scalar>(
    m_len: &S,
    m_ext: &S,
    m_spe: &S,
    t: &ControlThresholds<S>,
) -> (LengthBucket, ExtBucket, SpecBucket) {
    let len = LengthBucket::ALL[three_way(m_len, &t.len_low, &t.len_high) as usize];
    let ext = ExtBucket::ALL[three_way(m_ext, &t.ext_low, &t.ext_high) as usize];
    let spe = if *m_spe < t.spec_high { SpecBucket::Medium } else { SpecBucket::High };
    (len, ext, spe)
}

/// Index in the product length x extractiveness x specificity, 0..18.
pub fn style_bucket(len: LengthBucket, ext: ExtBucket, spe: SpecBucket) -> u8 {
    len as u8 * 6 + ext as u8 * 2 + spe as u8
}

pub fn style_from_id(id: u8) -> Option<(LengthBucket, ExtBucket, SpecBucket)> {
    (id < 18).then(|| {
        (
            LengthBucket::ALL[(id / 6) as usize],
            ExtBucket::ALL[((id / 2) % 3) as usize],
            SpecBucket::ALL[(id % 2) as usize],
        )
    })
}

pub trait KeywordExtractor: Send + Sync {
    fn extract(&self, summary: &TokenSeq, k: usize) -> Result<Vec<String>, ControlError>;
}

/// Top content tokens by TF-IDF against a reference corpus.
pub struct TfidfKeywords<'a> {
    pub stats: &'a CorpusStats,
}

impl KeywordExtractor for TfidfKeywords<'_> {
    fn extract(&self, summary: &TokenSeq, k: usize) -> Result<Vec<String>, ControlError> {
        extract_keywords(summary, self.stats, k)
    }
}

/// The `k` highest TF-IDF content tokens, ties by first occurrence.
pub fn extract_keywords(summary: &TokenSeq, stats: &CorpusStats, k: usize) -> Result<Vec<String>, ControlError> {
    let words: Vec<String> = tfidf_rank::<f64>(summary, stats)
        .into_iter()
        .filter(|s| is_content_token(&s.term))
        .take(k)
        .map(|s| s.term)
        .collect();
    if words.is_empty() {
        return Err(ControlError::NoKeywords);
    }
    Ok(words)
}

/// Buckets plus the raw values they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAttributes<S> {
    pub len_bucket: LengthBucket,
    pub ext_bucket: ExtBucket,
    pub spec_bucket: SpecBucket,
    pub keywords: Vec<String>,
    pub m_len: S,
    pub m_ext: S,
    pub m_spe: S,
}

impl<S: Scalar> ControlAttributes<S> {
    pub fn style_bucket(&self) -> u8 {
        style_bucket(self.len_bucket, self.ext_bucket, self.spec_bucket)
    }

    pub fn code(&self) -> ControlCode {
        ControlCode {
            length: Some(self.len_bucket),
            extractiveness: Some(self.ext_bucket),
            specificity: Some(self.spec_bucket),
            keywords: self.keywords.clone(),
        }
    }

    /// Whether the buckets agree with the raw values under `t`.
    pub fn consistent_with(&self, t: &ControlThresholds<S>) -> bool {
        bucketize(&self.m_len, &self.m_ext, &self.m_spe, t) == (self.len_bucket, self.ext_bucket, self.spec_bucket)
    }
}

/// Annotates a summary against its document.
pub fn annotate<S: Scalar>(
    summary_text: &str,
    summary: &TokenSeq,
    document: &TokenSeq,
    thresholds: &ControlThresholds<S>,
    keywords: &dyn KeywordExtractor,
    max_keywords: usize,
    tagger: &dyn Tagger,
) -> Result<ControlAttributes<S>, ControlError> {
    let len: S = m_len(summary);
    let ext: S = m_ext(summary, document)?;
    let spe: S = m_spe(summary_text, tagger)?;
    let (len_bucket, ext_bucket, spec_bucket) = bucketize(&len, &ext, &spe, thresholds);
    Ok(ControlAttributes {
        len_bucket,
        ext_bucket,
        spec_bucket,
        keywords: keywords.extract(summary, max_keywords.clamp(1, 2))?,
        m_len: len,
        m_ext: ext,
        m_spe: spe,
    })
}

/// Any subset of control attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCode {
    pub length: Option<LengthBucket>,
    pub extractiveness: Option<ExtBucket>,
    pub specificity: Option<SpecBucket>,
    pub keywords: Vec<String>,
}

pub const PLAIN_INSTRUCTION: &str = "Generate a summary.";

/// Renders the instruction prepended to a document. Attributes that are
/// absent drop their clauses.
pub fn render_control_code(code: &ControlCode) -> String {
    let mut out = String::from("Generate a");
    if let Some(l) = code.length {
        out.push(' ');
        out.push_str(l.name());
    }
    out.push_str(" summary");
    let mut with = Vec::new();
    if let Some(e) = code.extractiveness {
        with.push(format!("{} extractiveness", e.name()));
    }
    if let Some(s) = code.specificity {
        with.push(format!("{} specificity", s.name()));
    }
    if !with.is_empty() {
        out.push_str(" with ");
        out.push_str(&with.join(" and "));
    }
    if !code.keywords.is_empty() {
        out.push_str(", focusing on given keywords: ");
        out.push_str(&code.keywords.join(", "));
    }
    out.push('.');
    out
}
