//! One function per subcommand. Each runs a single pipeline stage.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pmidistill::control::TfidfKeywords;
use pmidistill::generator::PrefixSpec;
use pmidistill::pipeline::{
    annotated_file, best_of_n, candidates_file, dataset_report, downsample_balance, export_distillation,
    expert_iterate, filtered_file, run_annotation_stage, run_filter_stage, run_generation_stage, stage_tag,
    training_sequences, AnnotateContext, DatasetRecord, ExportMode, FilterContext, NgramTrainer, PipelineError,
    StageOptions, Store,
};
use pmidistill::scoring::{CausalScorer, InfillScorer, NgramBackend, RemoteScorer, ScoreError};
use pmidistill::synth::{bundled_corpus, synthetic_corpus, SynthConfig};
use pmidistill::text::{tokenize, CorpusStats, ReferenceTagger, TokenSeq};

use crate::config::{Backend, CorpusSource, RunConfig};

/// Environment variable holding the bearer token for remote backends.
pub const AUTH_ENV: &str = "PMIDISTILL_AUTH_TOKEN";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, input or stage order: exit status 1.
    Validation(String),
    /// Failure while running: exit status 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Invalid(_) | PipelineError::Precondition(_) => Self::Validation(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::InvalidConfig(_) => Self::Validation(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Session {
    pub cfg: RunConfig,
    pub opts: StageOptions,
    corpus: Option<Vec<TokenSeq>>,
    stats: Option<CorpusStats>,
}

enum Teacher {
    Ngram(NgramBackend),
    Remote(RemoteScorer),
}

impl Teacher {
    fn scorer(&self) -> &dyn CausalScorer<f64> {
        match self {
            Self::Ngram(b) => b,
            Self::Remote(r) => r,
        }
    }
}

pub fn teacher_artifact(round: u32) -> String {
    format!("teacher.{}.json", stage_tag(round))
}

pub fn training_file(round: u32) -> String {
    format!("training.{}.jsonl", stage_tag(round))
}

impl Session {
    pub fn new(cfg: RunConfig, stage_limit: Option<u64>) -> Self {
        let opts = StageOptions { workers: cfg.workers, chunk: cfg.chunk, limit: stage_limit };
        Self { cfg, opts, corpus: None, stats: None }
    }

    /// Opens the store and pins the config digest on first use.
    fn store(&self) -> Result<Store> {
        let store = Store::open(&self.cfg.store)?;
        let digest = self.cfg.digest();
        let recorded = store.manifest()?.config_digest;
        match recorded {
            None => store.update_manifest(|m| m.config_digest = Some(digest))?,
            Some(d) if d == digest => {}
            Some(d) => {
                return Err(CliError::Validation(format!(
                    "store {} was created with config digest {d}, current config has {digest}",
                    self.cfg.store.display()
                )))
            }
        }
        Ok(store)
    }

    fn corpus(&mut self) -> Result<&[TokenSeq]> {
        if self.corpus.is_none() {
            let docs: Vec<TokenSeq> = match &self.cfg.corpus {
                CorpusSource::Synthetic => bundled_corpus().into_iter().map(tokenize).collect(),
                CorpusSource::File(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| CliError::Validation(format!("corpus {}: {e}", p.display())))?;
                    text.lines().filter(|l| !l.trim().is_empty()).map(tokenize).collect()
                }
            };
            if docs.is_empty() {
                return Err(CliError::Validation("reference corpus is empty".into()));
            }
            self.corpus = Some(docs);
        }
        Ok(self.corpus.as_deref().expect("just set"))
    }

    fn stats(&mut self) -> Result<&CorpusStats> {
        if self.stats.is_none() {
            let stats = CorpusStats::build(self.corpus()?.iter());
            self.stats = Some(stats);
        }
        Ok(self.stats.as_ref().expect("just set"))
    }

    fn remote(&self, endpoint: &str) -> Result<RemoteScorer> {
        let auth = std::env::var(AUTH_ENV).ok();
        Ok(RemoteScorer::connect(endpoint, auth, self.cfg.retry)?.with_top_k(self.cfg.top_k))
    }

    fn load_artifact(path: &Path) -> Result<NgramBackend> {
        if !path.exists() {
            return Err(CliError::Validation(format!("model artifact {} not found", path.display())));
        }
        Ok(NgramBackend::load(path)?)
    }

    fn base_teacher(&mut self) -> Result<Teacher> {
        Ok(match self.cfg.teacher.clone() {
            Backend::Ngram(c) => Teacher::Ngram(NgramBackend::train(self.corpus()?, c)?),
            Backend::Artifact(p) => Teacher::Ngram(Self::load_artifact(&p)?),
            Backend::Remote(url) => Teacher::Remote(self.remote(&url)?),
        })
    }

    /// Teacher for round `round`: the base model at round 0, afterwards the
    /// artifact written by `iterate`. Remote teachers are used as served.
    fn teacher(&mut self, store: &Store, round: u32) -> Result<Teacher> {
        if round == 0 || matches!(self.cfg.teacher, Backend::Remote(_)) {
            return self.base_teacher();
        }
        let path = store.path(&teacher_artifact(round));
        if !path.exists() {
            return Err(CliError::Validation(format!(
                "no teacher for round {round}; run `iterate --round {}` first",
                round - 1
            )));
        }
        Ok(Teacher::Ngram(NgramBackend::load(&path)?))
    }

    fn critic(&mut self) -> Result<Box<dyn InfillScorer<f64>>> {
        Ok(match self.cfg.critic.clone() {
            Backend::Ngram(c) => Box::new(NgramBackend::train(self.corpus()?, c)?),
            Backend::Artifact(p) => Box::new(Self::load_artifact(&p)?),
            Backend::Remote(url) => Box::new(self.remote(&url)?),
        })
    }

    fn prefix_spec(&self) -> Result<PrefixSpec> {
        match &self.cfg.prefix_files {
            None => Ok(PrefixSpec::bundled()),
            Some((c, m)) => PrefixSpec::from_files(c, m).map_err(|e| CliError::Validation(e.to_string())),
        }
    }

    pub fn generate(&mut self, round: u32) -> Result<String> {
        self.check_round(round)?;
        let store = self.store()?;
        let teacher = self.teacher(&store, round)?;
        let spec = self.prefix_spec()?;
        let n = self.cfg.candidates(round);
        let entry = run_generation_stage::<f64, _>(
            teacher.scorer(),
            &spec,
            &self.cfg.decode,
            n,
            round,
            self.cfg.seed,
            &store,
            &self.opts,
        )?;
        Ok(format!(
            "{}: {}/{} candidates{}",
            candidates_file(round),
            entry.records,
            entry.target,
            if entry.complete { "" } else { " (partial)" }
        ))
    }

    pub fn filter(&mut self, round: u32) -> Result<String> {
        self.check_round(round)?;
        let store = self.store()?;
        let critic = self.critic()?;
        let short_circuit = self.cfg.short_circuit;
        let critics = self.cfg.critics.clone();
        let opts = self.opts;
        let stats = self.stats()?;
        let ctx = FilterContext { cfg: &critics, infill: critic.as_ref(), stats, short_circuit };
        let run = run_filter_stage(&store, round, &ctx, &opts)?;
        Ok(format!(
            "{}: {} of {} accepted (efficiency {:.4}); rejected brevity {}, saliency {}, faithfulness {}; discarded {}; errored {}",
            filtered_file(round),
            run.accepted,
            run.generated,
            run.efficiency(),
            run.rejected_brevity,
            run.rejected_saliency,
            run.rejected_faithfulness,
            run.discarded,
            run.errored
        ))
    }

    /// Fits the teacher on the accepted pairs of `round`, producing the
    /// teacher for `round + 1`.
    pub fn iterate(&mut self, round: u32) -> Result<String> {
        if round >= self.cfg.rounds {
            return Err(CliError::Validation(format!(
                "iterate.rounds is {}; round {round} would produce teacher round {}",
                self.cfg.rounds,
                round + 1
            )));
        }
        let store = self.store()?;
        let records = store.read::<f64>(&filtered_file(round))?;
        let seqs = training_sequences(&records);
        if seqs.is_empty() {
            return Err(CliError::Validation(format!("{} has no accepted records", filtered_file(round))));
        }
        let train_path = store.path(&training_file(round + 1));
        let ids = records.iter().filter(|r| r.accepted()).map(|r| r.id);
        write_jsonl(
            &train_path,
            ids.zip(&seqs).map(|(id, s)| {
                serde_json::to_string(&TrainingRow { id, text: s.join(" ") }).expect("row serializes")
            }),
        )?;
        match self.teacher(&store, round)? {
            Teacher::Remote(_) => Ok(format!(
                "{}: {} sequences for out-of-process training",
                training_file(round + 1),
                seqs.len()
            )),
            Teacher::Ngram(base) => {
                let next = expert_iterate::<f64, _, _>(&base, &store, round, &NgramTrainer { epochs: self.cfg.epochs })?;
                let out = store.path(&teacher_artifact(round + 1));
                let tmp = out.with_extension("json.tmp");
                next.save(&tmp)?;
                std::fs::rename(&tmp, &out)?;
                Ok(format!("{}: fitted on {} accepted pairs", teacher_artifact(round + 1), seqs.len()))
            }
        }
    }

    pub fn annotate(&mut self, round: u32) -> Result<String> {
        self.check_round(round)?;
        let store = self.store()?;
        let thresholds = self.cfg.thresholds.clone();
        let max_keywords = self.cfg.max_keywords;
        let opts = self.opts;
        let tagger = ReferenceTagger::default();
        let stats = self.stats()?;
        let keywords = TfidfKeywords { stats };
        let ctx = AnnotateContext { thresholds: &thresholds, keywords: &keywords, max_keywords, tagger: &tagger };
        let report = run_annotation_stage(&store, round, &ctx, &opts)?;
        Ok(format!("{}: {} annotated, {} failed", annotated_file(round), report.annotated, report.failed))
    }

    pub fn export(&mut self, round: u32, mode: ExportMode, out: Option<PathBuf>) -> Result<String> {
        self.check_round(round)?;
        let store = self.store()?;
        let annotated = annotated_file(round);
        let mut records = match mode {
            ExportMode::Controlled => self.complete_file(&store, &annotated, "annotate")?,
            ExportMode::Plain if store.exists(&annotated) => self.complete_file(&store, &annotated, "annotate")?,
            ExportMode::Plain => self.complete_file(&store, &filtered_file(round), "filter")?,
        };
        if let Some(target) = self.cfg.balance_target {
            records = downsample_balance(&records, target, self.cfg.seed)?;
        }
        let name = format!("export.{}.{}", mode_name(mode), stage_tag(round));
        let path = out.unwrap_or_else(|| store.path(&format!("{name}.jsonl")));
        let mut sink = BufWriter::new(File::create(&path)?);
        let manifest = export_distillation(&records, mode, &mut sink)?;
        sink.flush()?;
        let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(store.path(&format!("{name}.manifest.json")), format!("{manifest_json}\n"))?;
        Ok(manifest_json)
    }

    pub fn stats_report(&mut self, round: u32, input: Option<PathBuf>) -> Result<String> {
        let records = match input {
            Some(p) => read_records(&p)?,
            None => {
                self.check_round(round)?;
                let store = self.store()?;
                let mut records = self.complete_file(&store, &filtered_file(round), "filter")?;
                let annotated = annotated_file(round);
                if store.exists(&annotated) {
                    let buckets: std::collections::HashMap<u64, Option<u8>> =
                        store.read::<f64>(&annotated)?.into_iter().map(|r| (r.id, r.style_bucket)).collect();
                    for r in &mut records {
                        if let Some(b) = buckets.get(&r.id) {
                            r.style_bucket = *b;
                        }
                    }
                }
                records
            }
        };
        let report = dataset_report(&records, self.cfg.msttr_window)?;
        Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
    }

    pub fn rank(&mut self, input: &Path, output: Option<PathBuf>) -> Result<String> {
        let file = File::open(input).map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
        let mut requests = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let req: RankRequest = serde_json::from_str(&line)
                .map_err(|e| CliError::Validation(format!("{} line {}: {e}", input.display(), n + 1)))?;
            requests.push(req);
        }
        let critic = self.critic()?;
        let critics = self.cfg.critics.clone();
        let stats = self.stats()?;
        let mut lines = Vec::with_capacity(requests.len());
        for req in &requests {
            let ranked = best_of_n(&req.document, &req.candidates, &critics, critic.as_ref(), stats)?;
            let row = RankResult {
                index: ranked.index,
                summary: ranked.summary,
                scores: ranked
                    .scores
                    .iter()
                    .map(|&(saliency, faithfulness)| RankScore { saliency, faithfulness })
                    .collect(),
            };
            lines.push(serde_json::to_string(&row).expect("row serializes"));
        }
        match output {
            Some(p) => {
                write_jsonl(&p, lines.iter().cloned())?;
                Ok(format!("{}: {} selections", p.display(), lines.len()))
            }
            None => Ok(lines.join("\n")),
        }
    }

    fn check_round(&self, round: u32) -> Result<()> {
        if round > self.cfg.rounds {
            return Err(CliError::Validation(format!(
                "round {round} exceeds iterate.rounds = {}",
                self.cfg.rounds
            )));
        }
        Ok(())
    }

    fn complete_file(&self, store: &Store, file: &str, producer: &str) -> Result<Vec<DatasetRecord<f64>>> {
        let complete = store.manifest()?.stages.get(file).is_some_and(|e| e.complete);
        if !complete {
            return Err(CliError::Validation(format!("{file} is not complete; run `{producer}` first")));
        }
        Ok(store.read::<f64>(file)?)
    }
}

fn mode_name(mode: ExportMode) -> &'static str {
    match mode {
        ExportMode::Plain => "plain",
        ExportMode::Controlled => "controlled",
    }
}

#[derive(Debug, Deserialize)]
struct RankRequest {
    document: String,
    candidates: Vec<String>,
}

#[derive(Debug, Serialize)]
struct RankScore {
    saliency: f64,
    faithfulness: f64,
}

#[derive(Debug, Serialize)]
struct RankResult {
    index: usize,
    summary: String,
    scores: Vec<RankScore>,
}

/// One self-training example: the tokenized prefix, summary and document.
#[derive(Serialize)]
struct TrainingRow {
    id: u64,
    text: String,
}

fn write_jsonl<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<DatasetRecord<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Validation(format!("{} line {}: {e}", path.display(), n + 1)))
        })
        .collect()
}

/// Writes the synthetic corpus, one document per line.
pub fn synth_corpus(out: &Path, docs: Option<usize>, seed: Option<u64>) -> Result<String> {
    let mut cfg = SynthConfig::default();
    if let Some(d) = docs {
        cfg.docs = d;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let corpus = synthetic_corpus(&cfg);
    let mut w = BufWriter::new(File::create(out)?);
    for d in &corpus {
        writeln!(w, "{d}")?;
    }
    w.flush()?;
    Ok(format!("{}: {} documents", out.display(), corpus.len()))
}
