//! Templated news corpus for desk-scale runs.
//!
//! Each topic owns its subjects, verbs and objects, and every sentence opens
//! with a topic subject and closes on a topic object, so sentence
//! boundaries carry the topic. Documents are digests: most are short and
//! hop between topics from sentence to sentence.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::generator::{format_prefix, PrefixSpec};
use crate::scoring::NgramConfig;
use crate::text::detokenize;

struct Topic {
    subjects: &'static [&'static str],
    verbs: &'static [&'static str],
    objects: &'static [&'static str],
}

const TOPICS: &[Topic] = &[
    Topic {
        subjects: &["harbor officials", "dockworkers", "port managers", "shipping firms"],
        verbs: &["unloaded", "inspected", "rerouted", "delayed", "cleared"],
        objects: &["cargo vessels", "container cranes", "ferry crossings", "shipping lanes", "harbor tugs", "freight barges"],
    },
    Topic {
        subjects: &["council members", "lawmakers", "budget analysts", "city treasurers"],
        verbs: &["approved", "debated", "amended", "rejected", "audited"],
        objects: &["property taxes", "spending bills", "pension reforms", "budget deficits", "zoning rules", "bond measures"],
    },
    Topic {
        subjects: &["forecasters", "meteorologists", "storm chasers", "flood wardens"],
        verbs: &["tracked", "predicted", "measured", "monitored", "warned"],
        objects: &["heavy rainfall", "gale winds", "flash floods", "thunderstorms", "snow drifts", "cold fronts"],
    },
    Topic {
        subjects: &["coaches", "midfielders", "goalkeepers", "team captains"],
        verbs: &["celebrated", "defended", "trained", "scored", "conceded"],
        objects: &["penalty kicks", "league titles", "playoff games", "home fixtures", "cup finals", "transfer fees"],
    },
    Topic {
        subjects: &["surgeons", "nurses", "hospital administrators", "epidemiologists"],
        verbs: &["treated", "vaccinated", "diagnosed", "screened", "discharged"],
        objects: &["flu patients", "emergency wards", "vaccine doses", "clinic waitlists", "infection rates", "ambulance crews"],
    },
    Topic {
        subjects: &["teachers", "principals", "school boards", "university deans"],
        verbs: &["graded", "enrolled", "expanded", "tutored", "recruited"],
        objects: &["exam scores", "classroom sizes", "tuition fees", "reading programs", "scholarship funds", "lecture halls"],
    },
    Topic {
        subjects: &["detectives", "prosecutors", "police investigators", "forensic teams"],
        verbs: &["arrested", "charged", "questioned", "searched", "indicted"],
        objects: &["burglary suspects", "fraud rings", "stolen vehicles", "witness statements", "crime scenes", "gang leaders"],
    },
    Topic {
        subjects: &["traders", "economists", "central bankers", "fund managers"],
        verbs: &["forecast", "hedged", "raised", "lowered", "tightened"],
        objects: &["interest rates", "bond yields", "stock indexes", "currency reserves", "inflation targets", "trade deficits"],
    },
];

const LEAD_TIMES: &[&str] = &["overnight", "this morning", "last week", "earlier today"];
const TAIL_TIMES: &[&str] = &["on monday", "on tuesday", "on wednesday", "on thursday", "on friday"];
const EVENTS: &[&str] = &["holiday", "recess", "deadline", "strike", "blackout", "inquiry"];
const COUNTS: &[&str] = &["12", "40", "300", "2,500", "7", "18", "95", "1,200"];

/// Teacher model used with the synthetic corpus.
pub const TEACHER_NGRAM: NgramConfig = NgramConfig { order: 3, smoothing: 0.0003, cache_weight: 1.0 };

/// Critic scorer used with the synthetic corpus.
pub const CRITIC_NGRAM: NgramConfig = NgramConfig { order: 3, smoothing: 0.1, cache_weight: 1.0 };

/// Count weight given to accepted pairs when self-training the teacher.
pub const ITERATION_EPOCHS: u64 = 300;

/// Bundled copy of `synthetic_corpus(&SynthConfig::default())`, one document per line.
pub const BUNDLED_CORPUS: &str = include_str!("../data/synthetic_corpus.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    /// Chance that the next sentence stays on the current topic.
    pub p_stay: f64,
    /// Chance that a document is long.
    pub p_long: f64,
    pub short_sentences: (usize, usize),
    pub long_sentences: (usize, usize),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            docs: 3000,
            p_stay: 0.5,
            p_long: 0.03,
            short_sentences: (1, 2),
            long_sentences: (12, 30),
            seed: 20240611,
        }
    }
}

fn sentence<R: Rng>(topic: &Topic, rng: &mut R) -> Vec<String> {
    let subj = topic.subjects.choose(rng).expect("nonempty");
    let verb = topic.verbs.choose(rng).expect("nonempty");
    let obj = topic.objects.choose(rng).expect("nonempty");
    let event = EVENTS.choose(rng).expect("nonempty");
    let lead = LEAD_TIMES.choose(rng).expect("nonempty");
    let time = TAIL_TIMES.choose(rng).expect("nonempty");
    let count = COUNTS.choose(rng).expect("nonempty");
    let text = match rng.random_range(0..4) {
        0 => format!("{subj} {verb} {obj} {time} ."),
        1 => format!("{subj} said {count} {obj} were {verb} {time} ."),
        2 => format!("{subj} {verb} the {obj} after the {event} ."),
        _ => format!("{lead} , {subj} {verb} {count} {obj} ."),
    };
    text.split_whitespace().map(String::from).collect()
}

/// One document: prefix, then sentences on a topic chain.
fn document<R: Rng>(cfg: &SynthConfig, spec: &PrefixSpec, rng: &mut R) -> String {
    let city = spec.cities().choose(rng).expect("nonempty");
    let media = spec.media().choose(rng).expect("nonempty");
    let (lo, hi) = if rng.random_bool(cfg.p_long) { cfg.long_sentences } else { cfg.short_sentences };
    let n = rng.random_range(lo..=hi);
    let mut topic = rng.random_range(0..TOPICS.len());
    let mut tokens: Vec<String> = Vec::new();
    for i in 0..n {
        if i > 0 && !rng.random_bool(cfg.p_stay) {
            topic = (topic + rng.random_range(1..TOPICS.len())) % TOPICS.len();
        }
        tokens.extend(sentence(&TOPICS[topic], rng));
    }
    format!("{} {}", format_prefix(city, media), detokenize(&tokens))
}

/// Deterministic corpus, one document per entry.
pub fn synthetic_corpus(cfg: &SynthConfig) -> Vec<String> {
    let spec = PrefixSpec::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.docs).map(|_| document(cfg, &spec, &mut rng)).collect()
}

/// Documents of the bundled corpus.
pub fn bundled_corpus() -> Vec<&'static str> {
    BUNDLED_CORPUS.lines().collect()
}
