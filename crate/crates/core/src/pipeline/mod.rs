//! Over-generate, filter, self-train, annotate and export.
//!
//! Every stage reads and appends JSON Lines files in a [`Store`]; records
//! are keyed by candidate id and never rewritten.

mod export;
mod iterate;
mod rank;
mod report;
mod stages;
mod store;

pub use export::{downsample_balance, export_distillation, ExportManifest, ExportMode, ExportRow};
pub use iterate::{expert_iterate, training_sequences, IdentityTrainer, NgramTrainer, Trainer};
pub use rank::{best_of_n, Ranked};
pub use report::{dataset_report, median, population_std, DatasetReport, STYLE_BUCKETS};
pub use stages::{
    annotated_file, candidates_file, filtered_file, run_annotation_stage, run_filter_stage, run_generation_stage,
    AnnotateContext, AnnotationReport, FilterContext, StageOptions,
};
pub use store::{sha256_hex, Manifest, StageEntry, Store};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlAttributes, ControlError};
use crate::critics::{Critic, CriticError, CriticVerdict};
use crate::generator::{CandidatePair, DecodeParams, DiscardReason, GenError};
use crate::num::Real;
use crate::scoring::ScoreError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("store error: {0}")]
    Store(String),
    #[error(transparent)]
    Generation(#[from] GenError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        Self::Store(e.to_string())
    }
}

/// Stage tag for a teacher round: `init` for the initial model.
pub fn stage_tag(round: u32) -> String {
    if round == 0 {
        "init".to_string()
    } else {
        format!("round-{round}")
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct DatasetRecord<F> {
    pub id: u64,
    pub stage: String,
    pub round: u32,
    pub prefix: String,
    pub summary: String,
    pub document: String,
    pub params: DecodeParams,
    pub summary_sentences: u8,
    #[serde(default)]
    pub discarded: Option<DiscardReason>,
    #[serde(default)]
    pub verdict: Option<CriticVerdict<F>>,
    #[serde(default)]
    pub attrs: Option<ControlAttributes<F>>,
    #[serde(default)]
    pub style_bucket: Option<u8>,
    #[serde(default)]
    pub error: Option<String>,
}

impl<F: Real> DatasetRecord<F> {
    pub fn from_pair(pair: CandidatePair) -> Self {
        Self {
            id: pair.id,
            stage: stage_tag(pair.round),
            round: pair.round,
            prefix: pair.prefix,
            summary: pair.summary,
            document: pair.document,
            params: pair.params,
            summary_sentences: pair.summary_sentences,
            discarded: None,
            verdict: None,
            attrs: None,
            style_bucket: None,
            error: None,
        }
    }

    pub fn discarded(id: u64, round: u32, params: DecodeParams, reason: DiscardReason) -> Self {
        Self {
            id,
            stage: stage_tag(round),
            round,
            prefix: String::new(),
            summary: String::new(),
            document: String::new(),
            params,
            summary_sentences: 0,
            discarded: Some(reason),
            verdict: None,
            attrs: None,
            style_bucket: None,
            error: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.verdict.as_ref().is_some_and(CriticVerdict::pass_all)
    }
}

/// Counts for one filter pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub generated: u64,
    pub accepted: u64,
    pub rejected_brevity: u64,
    pub rejected_saliency: u64,
    pub rejected_faithfulness: u64,
    pub discarded: u64,
    pub errored: u64,
    #[serde(skip)]
    pub wall_clock: std::time::Duration,
}

impl RunStats {
    pub fn efficiency(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.accepted as f64 / self.generated as f64
        }
    }

    pub fn record<F: Real>(&mut self, r: &DatasetRecord<F>) {
        self.generated += 1;
        if r.discarded.is_some() {
            self.discarded += 1;
        } else if r.error.is_some() {
            self.errored += 1;
        } else if let Some(v) = &r.verdict {
            match v.first_rejection() {
                None => self.accepted += 1,
                Some(Critic::Brevity) => self.rejected_brevity += 1,
                Some(Critic::Saliency) => self.rejected_saliency += 1,
                Some(Critic::Faithfulness) => self.rejected_faithfulness += 1,
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.generated += other.generated;
        self.accepted += other.accepted;
        self.rejected_brevity += other.rejected_brevity;
        self.rejected_saliency += other.rejected_saliency;
        self.rejected_faithfulness += other.rejected_faithfulness;
        self.discarded += other.discarded;
        self.errored += other.errored;
        self.wall_clock += other.wall_clock;
    }

    /// Accepted plus every rejection category equals generated.
    pub fn balanced(&self) -> bool {
        self.accepted
            + self.rejected_brevity
            + self.rejected_saliency
            + self.rejected_faithfulness
            + self.discarded
            + self.errored
            == self.generated
    }

    pub fn from_records<F: Real>(records: &[DatasetRecord<F>]) -> Self {
        let mut s = Self::default();
        for r in records {
            s.record(r);
        }
        s
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the private stream for candidate `id` of teacher round `round`.
pub fn candidate_seed(seed: u64, round: u32, id: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ round as u64) ^ id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_candidate_and_round() {
        let a = candidate_seed(1, 0, 0);
        assert_ne!(a, candidate_seed(1, 0, 1));
        assert_ne!(a, candidate_seed(1, 1, 0));
        assert_ne!(a, candidate_seed(2, 0, 0));
        assert_eq!(a, candidate_seed(1, 0, 0));
    }

    #[test]
    fn tags() {
        assert_eq!(stage_tag(0), "init");
        assert_eq!(stage_tag(2), "round-2");
    }
}
