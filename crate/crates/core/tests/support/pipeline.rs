//! End-to-end driver over the library stages with the reference setup.

use std::collections::BTreeMap;
use std::path::Path;

use pmidistill::control::{ControlThresholds, TfidfKeywords};
use pmidistill::critics::CriticConfig;
use pmidistill::generator::{DecodeParams, PrefixSpec};
use pmidistill::pipeline::{
    annotated_file, candidates_file, expert_iterate, export_distillation, filtered_file, run_annotation_stage,
    run_filter_stage, run_generation_stage, AnnotateContext, ExportMode, FilterContext, NgramTrainer, StageOptions,
    Store,
};
use pmidistill::scoring::NgramBackend;
use pmidistill::synth::{ITERATION_EPOCHS, TEACHER_NGRAM};
use pmidistill::text::{CorpusStats, ReferenceTagger, TokenSeq};

pub struct Reference {
    pub corpus: Vec<TokenSeq>,
    pub teacher: NgramBackend,
    pub critic: NgramBackend,
    pub stats: CorpusStats,
    pub tagger: ReferenceTagger,
    pub spec: PrefixSpec,
}

impl Reference {
    pub fn new() -> Self {
        let corpus = super::corpus();
        Self {
            teacher: NgramBackend::train(&corpus, TEACHER_NGRAM).unwrap(),
            critic: super::critic(&corpus),
            stats: super::stats(&corpus),
            tagger: ReferenceTagger::default(),
            spec: PrefixSpec::bundled(),
            corpus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub efficiency: Vec<f64>,
    pub export_digests: Vec<String>,
    /// sha256 of every stage file by name.
    pub files: BTreeMap<String, String>,
}

/// Generates, filters, annotates and exports `rounds + 1` teacher rounds of
/// `n` candidates each, self-training between rounds. Stages are rerun
/// until complete, so `opts.limit` exercises resumption.
pub fn full_run(r: &Reference, dir: &Path, n: u64, rounds: u32, seed: u64, opts: StageOptions) -> RunOutcome {
    let store = Store::open(dir).unwrap();
    let params = DecodeParams::default();
    let cfg = CriticConfig::<f64>::default();
    let thresholds = ControlThresholds::<f64>::default();
    let keywords = TfidfKeywords { stats: &r.stats };
    let mut teacher = r.teacher.clone();
    let mut out = RunOutcome { efficiency: Vec::new(), export_digests: Vec::new(), files: BTreeMap::new() };
    for round in 0..=rounds {
        while !run_generation_stage::<f64, _>(&teacher, &r.spec, &params, n, round, seed, &store, &opts)
            .unwrap()
            .complete
        {}
        let ctx = FilterContext { cfg: &cfg, infill: &r.critic, stats: &r.stats, short_circuit: true };
        let stats = loop {
            let s = run_filter_stage(&store, round, &ctx, &opts).unwrap();
            if store.manifest().unwrap().stages[&filtered_file(round)].complete {
                break s;
            }
        };
        out.efficiency.push(stats.efficiency());
        let actx = AnnotateContext { thresholds: &thresholds, keywords: &keywords, max_keywords: 2, tagger: &r.tagger };
        run_annotation_stage(&store, round, &actx, &opts).unwrap();
        let annotated = store.read::<f64>(&annotated_file(round)).unwrap();
        let mut sink = Vec::new();
        let m = export_distillation(&annotated, ExportMode::Controlled, &mut sink).unwrap();
        out.export_digests.push(m.digest);
        for f in [candidates_file(round), filtered_file(round), annotated_file(round)] {
            out.files.insert(f.clone(), store.file_digest(&f).unwrap());
        }
        if round < rounds {
            teacher = expert_iterate::<f64, _, _>(&teacher, &store, round, &NgramTrainer { epochs: ITERATION_EPOCHS })
                .unwrap();
        }
    }
    out
}
