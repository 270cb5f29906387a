use super::{stages::filtered_file, DatasetRecord, PipelineError, Store};
use crate::num::Real;
use crate::scoring::NgramBackend;
use crate::text::tokenize;

/// Fits a new teacher on token sequences; never mutates `base`.
pub trait Trainer<B>: Send + Sync {
    fn fit(&self, base: &B, sequences: &[Vec<String>]) -> Result<B, PipelineError>;
}

/// Returns the base model unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTrainer;

impl<B: Clone> Trainer<B> for IdentityTrainer {
    fn fit(&self, base: &B, _sequences: &[Vec<String>]) -> Result<B, PipelineError> {
        Ok(base.clone())
    }
}

/// Adds each sequence `epochs` times to the count tables.
#[derive(Debug, Clone, Copy)]
pub struct NgramTrainer {
    pub epochs: u64,
}

impl Trainer<NgramBackend> for NgramTrainer {
    fn fit(&self, base: &NgramBackend, sequences: &[Vec<String>]) -> Result<NgramBackend, PipelineError> {
        if self.epochs == 0 {
            return Err(PipelineError::Invalid("epochs must be at least 1".into()));
        }
        Ok(base.with_documents(sequences, self.epochs))
    }
}

/// Accepted records rendered as prefix, summary and document tokens.
pub fn training_sequences<F: Real>(records: &[DatasetRecord<F>]) -> Vec<Vec<String>> {
    records
        .iter()
        .filter(|r| r.accepted())
        .map(|r| tokenize(&format!("{} {} {}", r.prefix, r.summary, r.document)).into_tokens())
        .collect()
}

/// Self-trains `teacher` on the accepted pairs of round `round`.
pub fn expert_iterate<F: Real, B, T: Trainer<B> + ?Sized>(
    teacher: &B,
    store: &Store,
    round: u32,
    trainer: &T,
) -> Result<B, PipelineError> {
    let file = filtered_file(round);
    let records = store.read::<F>(&file)?;
    let seqs = training_sequences(&records);
    if seqs.is_empty() {
        return Err(PipelineError::Precondition(format!("{file} has no accepted records")));
    }
    trainer.fit(teacher, &seqs)
}
