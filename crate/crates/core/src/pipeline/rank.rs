use super::PipelineError;
use crate::critics::{faithfulness_pmi, saliency_pmi, CriticConfig};
use crate::num::Real;
use crate::scoring::InfillScorer;
use crate::text::{tokenize, CorpusStats};

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked<F> {
    pub index: usize,
    pub summary: String,
    /// `(saliency, faithfulness)` per candidate.
    pub scores: Vec<(F, F)>,
}

/// Picks the candidate with the largest saliency + faithfulness PMI;
/// ties go to the lower index.
pub fn best_of_n<F: Real, S: InfillScorer<F> + ?Sized>(
    document: &str,
    candidates: &[String],
    cfg: &CriticConfig<F>,
    infill: &S,
    stats: &CorpusStats,
) -> Result<Ranked<F>, PipelineError> {
    if candidates.is_empty() {
        return Err(PipelineError::Invalid("no candidate summaries".into()));
    }
    let x = tokenize(document);
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let y = tokenize(c);
        scores.push((saliency_pmi(&x, &y, infill, cfg, stats)?, faithfulness_pmi(&x, &y, infill, cfg, stats)?));
    }
    let mut best = 0;
    for (i, &(s, f)) in scores.iter().enumerate().skip(1) {
        if s + f > scores[best].0 + scores[best].1 {
            best = i;
        }
    }
    Ok(Ranked { index: best, summary: candidates[best].clone(), scores })
}
