use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::store::{Store, StageEntry};
use super::{candidate_seed, stage_tag, DatasetRecord, PipelineError, RunStats};
use crate::control::{annotate, ControlThresholds, KeywordExtractor};
use crate::critics::{apply_critics, screen_pair, CriticConfig};
use crate::generator::{generate_pair, DecodeParams, Generated, PrefixSpec};
use crate::num::Real;
use crate::scoring::{CausalScorer, InfillScorer};
use crate::text::{tokenize, CorpusStats, Tagger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageOptions {
    pub workers: usize,
    /// Candidates per parallel batch; each batch is committed before the
    /// next starts.
    pub chunk: usize,
    /// Stop after this many new records.
    pub limit: Option<u64>,
}

impl Default for StageOptions {
    fn default() -> Self {
        Self { workers: 1, chunk: 64, limit: None }
    }
}

impl StageOptions {
    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        if self.workers == 0 || self.chunk == 0 {
            return Err(PipelineError::Invalid("workers and chunk must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| PipelineError::Invalid(e.to_string()))
    }
}

pub fn candidates_file(round: u32) -> String {
    format!("candidates.{}.jsonl", stage_tag(round))
}

pub fn filtered_file(round: u32) -> String {
    format!("filtered.{}.jsonl", stage_tag(round))
}

pub fn annotated_file(round: u32) -> String {
    format!("annotated.{}.jsonl", stage_tag(round))
}

fn check_contiguous<F: Real>(records: &[DatasetRecord<F>], file: &str) -> Result<(), PipelineError> {
    for (i, r) in records.iter().enumerate() {
        if r.id != i as u64 {
            return Err(PipelineError::Store(format!("{file}: expected id {i}, found {}", r.id)));
        }
    }
    Ok(())
}

fn require_complete(store: &Store, file: &str, what: &str) -> Result<StageEntry, PipelineError> {
    let m = store.manifest()?;
    match m.stages.get(file) {
        Some(e) if e.complete => Ok(e.clone()),
        _ => Err(PipelineError::Precondition(format!("{file} is not complete; run {what} first"))),
    }
}

/// Runs `work` over `items` in fixed-size batches and appends results in
/// input order. On error, results preceding the failure are kept.
fn process_in_order<I, F, W>(
    store: &Store,
    file: &str,
    items: &[I],
    opts: &StageOptions,
    work: W,
) -> Result<(), PipelineError>
where
    I: Sync,
    F: Real,
    W: Fn(&I) -> Result<Option<DatasetRecord<F>>, PipelineError> + Sync + Send,
{
    let pool = opts.pool()?;
    let mut out = store.appender(file)?;
    for batch in items.chunks(opts.chunk) {
        let results: Vec<Result<Option<DatasetRecord<F>>, PipelineError>> =
            pool.install(|| batch.par_iter().map(&work).collect());
        for r in results {
            match r {
                Ok(Some(rec)) => out.push(&rec)?,
                Ok(None) => {}
                Err(e) => {
                    out.commit()?;
                    return Err(e);
                }
            }
        }
        out.commit()?;
    }
    Ok(())
}

fn finish_stage(
    store: &Store,
    file: &str,
    records: u64,
    target: u64,
    stats: Option<RunStats>,
) -> Result<StageEntry, PipelineError> {
    let complete = records == target;
    let entry = StageEntry {
        records,
        target,
        complete,
        digest: if complete { Some(store.file_digest(file)?) } else { None },
        stats,
    };
    let e = entry.clone();
    store.update_manifest(|m| {
        m.stages.insert(file.to_string(), e);
    })?;
    Ok(entry)
}

/// Generates candidates `0..n` for teacher round `round`, continuing after
/// the highest id already stored.
#[allow(clippy::too_many_arguments)]
pub fn run_generation_stage<F, S>(
    teacher: &S,
    spec: &PrefixSpec,
    params: &DecodeParams,
    n: u64,
    round: u32,
    seed: u64,
    store: &Store,
    opts: &StageOptions,
) -> Result<StageEntry, PipelineError>
where
    F: Real,
    S: CausalScorer<F> + ?Sized,
{
    if n == 0 {
        return Err(PipelineError::Invalid("candidate count must be at least 1".into()));
    }
    params.validate()?;
    let file = candidates_file(round);
    let existing = store.read::<F>(&file)?;
    check_contiguous(&existing, &file)?;
    let have = existing.len() as u64;
    if have > n {
        return Err(PipelineError::Precondition(format!("{file} already holds {have} records, more than {n}")));
    }
    let stop = opts.limit.map_or(n, |l| (have + l).min(n));
    let ids: Vec<u64> = (have..stop).collect();
    let result = process_in_order(store, &file, &ids, opts, |&id| {
        let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed(seed, round, id));
        Ok(Some(match generate_pair::<F, _, _>(teacher, spec, params, &mut rng, id, round)? {
            Generated::Pair(p) => DatasetRecord::<F>::from_pair(p),
            Generated::Discarded(reason) => DatasetRecord::discarded(id, round, *params, reason),
        }))
    });
    let written = store.read::<F>(&file)?.len() as u64;
    let entry = finish_stage(store, &file, written, n, None)?;
    result.map(|_| entry)
}

pub struct FilterContext<'a, F, S: ?Sized> {
    pub cfg: &'a CriticConfig<F>,
    pub infill: &'a S,
    pub stats: &'a CorpusStats,
    /// Stop at the first failing critic.
    pub short_circuit: bool,
}

/// Attaches a verdict to every candidate of round `round`.
pub fn run_filter_stage<F, S>(
    store: &Store,
    round: u32,
    ctx: &FilterContext<'_, F, S>,
    opts: &StageOptions,
) -> Result<RunStats, PipelineError>
where
    F: Real,
    S: InfillScorer<F> + ?Sized,
{
    ctx.cfg.validate()?;
    let source = candidates_file(round);
    require_complete(store, &source, "generate")?;
    let file = filtered_file(round);
    let candidates = store.read::<F>(&source)?;
    let done = store.read::<F>(&file)?;
    check_contiguous(&done, &file)?;
    let start = Instant::now();
    let stop = opts.limit.map_or(candidates.len(), |l| (done.len() + l as usize).min(candidates.len()));
    let todo = &candidates[done.len().min(stop)..stop];
    let result = process_in_order(store, &file, todo, opts, |c: &DatasetRecord<F>| {
        let mut rec = c.clone();
        if rec.discarded.is_some() {
            return Ok(Some(rec));
        }
        let x = tokenize(&rec.document);
        let y = tokenize(&rec.summary);
        let verdict = if ctx.short_circuit {
            screen_pair(&x, &y, ctx.cfg, ctx.infill, ctx.stats)
        } else {
            apply_critics(&x, &y, ctx.cfg, ctx.infill, ctx.stats)
        };
        match verdict {
            Ok(v) => rec.verdict = Some(v),
            Err(e) => rec.error = Some(e.to_string()),
        }
        Ok(Some(rec))
    });
    let all = store.read::<F>(&file)?;
    let mut stats = RunStats::from_records(&all);
    stats.wall_clock = start.elapsed();
    finish_stage(store, &file, all.len() as u64, candidates.len() as u64, Some(stats.clone()))?;
    result.map(|_| stats)
}

pub struct AnnotateContext<'a, F> {
    pub thresholds: &'a ControlThresholds<F>,
    pub keywords: &'a dyn KeywordExtractor,
    pub max_keywords: usize,
    pub tagger: &'a dyn Tagger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnnotationReport {
    pub annotated: u64,
    /// Accepted records that could not be annotated in this invocation.
    pub failed: u64,
}

/// Annotates the accepted records of round `round`. Records that cannot
/// be annotated are left out.
pub fn run_annotation_stage<F: Real>(
    store: &Store,
    round: u32,
    ctx: &AnnotateContext<'_, F>,
    opts: &StageOptions,
) -> Result<AnnotationReport, PipelineError> {
    ctx.thresholds.validate()?;
    let source = filtered_file(round);
    require_complete(store, &source, "filter")?;
    let file = annotated_file(round);
    if store.manifest()?.stages.get(&file).is_some_and(|e| e.complete) {
        return Ok(AnnotationReport { annotated: store.read::<F>(&file)?.len() as u64, failed: 0 });
    }
    let accepted: Vec<DatasetRecord<F>> = store.read::<F>(&source)?.into_iter().filter(|r| r.accepted()).collect();
    let done = store.read::<F>(&file)?;
    let last = done.last().map(|r| r.id);
    let todo: Vec<&DatasetRecord<F>> = accepted.iter().filter(|r| last.is_none_or(|l| r.id > l)).collect();
    let failures = std::sync::atomic::AtomicU64::new(0);
    process_in_order(store, &file, &todo, opts, |r: &&DatasetRecord<F>| {
        let mut rec = (*r).clone();
        let y = tokenize(&rec.summary);
        let x = tokenize(&rec.document);
        match annotate(&rec.summary, &y, &x, ctx.thresholds, ctx.keywords, ctx.max_keywords, ctx.tagger) {
            Ok(a) => {
                rec.style_bucket = Some(a.style_bucket());
                rec.attrs = Some(a);
                Ok(Some(rec))
            }
            Err(e) => {
                log::warn!("record {}: annotation failed: {e}", rec.id);
                failures.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                Ok(None)
            }
        }
    })?;
    let annotated = store.read::<F>(&file)?.len() as u64;
    finish_stage(store, &file, annotated, annotated, None)?;
    Ok(AnnotationReport { annotated, failed: failures.into_inner() })
}
