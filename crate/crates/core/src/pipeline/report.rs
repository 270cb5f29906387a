//! Dataset statistics for the `stats` report.

use serde::{Deserialize, Serialize};

use super::{DatasetRecord, PipelineError, RunStats};
use crate::num::Real;
use crate::text::{msttr, ngram_entropy, tokenize, TokenSeq};

pub const STYLE_BUCKETS: usize = 18;

/// Diversity and length statistics over the accepted summaries of a
/// record set, plus its sampling efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub records: u64,
    pub accepted: u64,
    pub efficiency: f64,
    pub h2: f64,
    pub h3: f64,
    pub msttr: f64,
    pub msttr_window: usize,
    pub length_median: f64,
    /// Population standard deviation of summary lengths in tokens.
    pub length_std: f64,
    pub style_histogram: [u64; STYLE_BUCKETS],
    pub unannotated: u64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

pub fn population_std(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some((values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

/// Builds the report. Records need not be accepted; only accepted ones
/// contribute summaries.
pub fn dataset_report<F: Real>(records: &[DatasetRecord<F>], window: usize) -> Result<DatasetReport, PipelineError> {
    let run = RunStats::from_records(records);
    let accepted: Vec<&DatasetRecord<F>> = records.iter().filter(|r| r.accepted()).collect();
    if accepted.is_empty() {
        return Err(PipelineError::Precondition("no accepted records to report on".into()));
    }
    let summaries: Vec<TokenSeq> = accepted.iter().map(|r| tokenize(&r.summary)).collect();
    let text = |e: crate::text::TextError| PipelineError::Precondition(e.to_string());
    let lengths: Vec<f64> = summaries.iter().map(|s| s.len() as f64).collect();
    let mut style_histogram = [0u64; STYLE_BUCKETS];
    let mut unannotated = 0;
    for r in &accepted {
        match r.style_bucket {
            Some(b) if (b as usize) < STYLE_BUCKETS => style_histogram[b as usize] += 1,
            _ => unannotated += 1,
        }
    }
    Ok(DatasetReport {
        records: records.len() as u64,
        accepted: accepted.len() as u64,
        efficiency: run.efficiency(),
        h2: ngram_entropy::<f64>(&summaries, 2).map_err(text)?,
        h3: ngram_entropy::<f64>(&summaries, 3).map_err(text)?,
        msttr: msttr::<f64>(&summaries, window).map_err(text)?,
        msttr_window: window,
        length_median: median(&lengths).unwrap_or(0.0),
        length_std: population_std(&lengths).unwrap_or(0.0),
        style_histogram,
        unannotated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn population_not_sample_std() {
        assert_eq!(population_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), Some(2.0));
        assert_eq!(population_std(&[5.0]), Some(0.0));
    }
}
