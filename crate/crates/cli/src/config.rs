//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key has a default,
//! unknown keys are rejected, and `PMIDISTILL_<KEY>` environment variables
//! (dots and dashes become underscores, letters upper-cased) override the
//! file. Command-line flags override both.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use pmidistill::control::ControlThresholds;
use pmidistill::critics::{CriticConfig, MaskPolicy};
use pmidistill::generator::DecodeParams;
use pmidistill::pipeline::sha256_hex;
use pmidistill::scoring::{NgramConfig, RetryPolicy};

pub const ENV_PREFIX: &str = "PMIDISTILL_";

/// Keys that do not change results and stay out of the digest.
const UNDIGESTED: &[&str] = &["store", "workers", "chunk"];

const DEFAULTS: &[(&str, &str)] = &[
    ("store", "store"),
    ("seed", "0"),
    ("workers", "1"),
    ("chunk", "64"),
    ("corpus", "synthetic"),
    ("teacher.backend", "ngram"),
    ("teacher.artifact", ""),
    ("teacher.endpoint", ""),
    ("teacher.order", "3"),
    ("teacher.smoothing", "0.0003"),
    ("teacher.cache_weight", "1"),
    ("critic.backend", "ngram"),
    ("critic.artifact", ""),
    ("critic.endpoint", ""),
    ("critic.order", "3"),
    ("critic.smoothing", "0.1"),
    ("critic.cache_weight", "1"),
    ("remote.top_k", ""),
    ("remote.max_attempts", "5"),
    ("remote.timeout_ms", "60000"),
    ("critic.tau_s", "log(14)"),
    ("critic.tau_f", "log(1.7)"),
    ("critic.tau_b", "0.2"),
    ("critic.mask_fraction", "0.25"),
    ("critic.mask_policy", "tfidf"),
    ("critic.mask_seed", "0"),
    ("critic.normalized", "false"),
    ("critic.short_circuit", "true"),
    ("decode.alpha", "1"),
    ("decode.top_p", "0.9"),
    ("decode.temperature", "1"),
    ("decode.max_doc_tokens", "1024"),
    ("decode.min_summary_sentences", "1"),
    ("decode.max_summary_sentences", "5"),
    ("prefix.cities", ""),
    ("prefix.media", ""),
    ("control.len_low", "38"),
    ("control.len_high", "69"),
    ("control.ext_low", "34/100"),
    ("control.ext_high", "51/100"),
    ("control.spec_high", "48/10"),
    ("control.max_keywords", "2"),
    ("candidates.init", "1000"),
    ("candidates.round", "1000"),
    ("iterate.rounds", "1"),
    ("iterate.epochs", "300"),
    ("export.balance_target", ""),
    ("stats.msttr_window", "100"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// Trained in-process on the configured corpus.
    Ngram(NgramConfig),
    Artifact(PathBuf),
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    Synthetic,
    /// One document per line.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub store: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub chunk: usize,
    pub corpus: CorpusSource,
    pub teacher: Backend,
    pub critic: Backend,
    pub top_k: Option<usize>,
    pub retry: RetryPolicy,
    pub critics: CriticConfig<f64>,
    pub short_circuit: bool,
    pub decode: DecodeParams,
    pub prefix_files: Option<(PathBuf, PathBuf)>,
    pub thresholds: ControlThresholds<f64>,
    pub max_keywords: usize,
    pub candidates_init: u64,
    pub candidates_round: u64,
    pub rounds: u32,
    pub epochs: u64,
    pub balance_target: Option<usize>,
    pub msttr_window: usize,
    values: BTreeMap<String, String>,
}

/// Command-line values that take precedence over file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub store: Option<PathBuf>,
}

pub fn env_name(key: &str) -> String {
    let mut s = String::from(ENV_PREFIX);
    s.extend(key.chars().map(|c| if c == '.' || c == '-' { '_' } else { c.to_ascii_uppercase() }));
    s
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected `key = value`", n + 1));
        };
        let k = k.trim().to_string();
        if !DEFAULTS.iter().any(|(d, _)| *d == k) {
            return err(format!("line {}: unknown key `{k}`", n + 1));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return err(format!("line {}: duplicate key `{k}`", n + 1));
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("{key}: cannot parse `{v}`")))
}

/// A decimal, `a/b`, or `log(x)` (natural log).
fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    if let Some(inner) = v.strip_prefix("log(").and_then(|r| r.strip_suffix(')')) {
        let x: f64 = num(key, inner.trim())?;
        if !(x > 0.0) {
            return err(format!("{key}: log argument must be positive"));
        }
        return Ok(x.ln());
    }
    if let Some((a, b)) = v.split_once('/') {
        let a: u64 = num(key, a.trim())?;
        let b: u64 = num(key, b.trim())?;
        if b == 0 {
            return err(format!("{key}: zero denominator"));
        }
        return Ok(a as f64 / b as f64);
    }
    let x: f64 = num(key, v)?;
    if !x.is_finite() {
        return err(format!("{key}: must be finite"));
    }
    Ok(x)
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => err(format!("{key}: expected true or false, got `{v}`")),
    }
}

fn optional<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>, ConfigError> {
    if v.is_empty() {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies environment and flag overrides, then
    /// validates everything.
    pub fn load(path: Option<&Path>, env: &dyn Fn(&str) -> Option<String>, ov: &Overrides) -> Result<Self, ConfigError> {
        let (file, base) = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                (parse_lines(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values.extend(file);
        for (k, _) in DEFAULTS {
            if let Some(v) = env(&env_name(k)) {
                values.insert(k.to_string(), v.trim().to_string());
            }
        }
        if let Some(s) = ov.seed {
            values.insert("seed".into(), s.to_string());
        }
        if let Some(w) = ov.workers {
            values.insert("workers".into(), w.to_string());
        }
        let mut cfg = Self::from_values(values, &base)?;
        if let Some(s) = &ov.store {
            cfg.store = s.clone();
        }
        Ok(cfg)
    }

    fn from_values(values: BTreeMap<String, String>, base: &Path) -> Result<Self, ConfigError> {
        let get = |k: &str| values.get(k).map(String::as_str).unwrap_or("");
        let path = |k: &str| -> Option<PathBuf> {
            let v = get(k);
            (!v.is_empty()).then(|| base.join(v))
        };
        let ngram = |prefix: &str| -> Result<NgramConfig, ConfigError> {
            let c = NgramConfig {
                order: num(&format!("{prefix}.order"), get(&format!("{prefix}.order")))?,
                smoothing: real(&format!("{prefix}.smoothing"), get(&format!("{prefix}.smoothing")))?,
                cache_weight: real(&format!("{prefix}.cache_weight"), get(&format!("{prefix}.cache_weight")))?,
            };
            c.validate().map_err(|e| ConfigError(format!("{prefix}: {e}")))?;
            Ok(c)
        };
        let backend = |prefix: &str| -> Result<Backend, ConfigError> {
            match get(&format!("{prefix}.backend")) {
                "ngram" => Ok(Backend::Ngram(ngram(prefix)?)),
                "artifact" => match path(&format!("{prefix}.artifact")) {
                    Some(p) => Ok(Backend::Artifact(p)),
                    None => err(format!("{prefix}.artifact is required for the artifact backend")),
                },
                "remote" => match get(&format!("{prefix}.endpoint")) {
                    "" => err(format!("{prefix}.endpoint is required for the remote backend")),
                    url => Ok(Backend::Remote(url.to_string())),
                },
                other => err(format!("{prefix}.backend: expected ngram, artifact or remote, got `{other}`")),
            }
        };

        let critics = CriticConfig {
            tau_s_log: real("critic.tau_s", get("critic.tau_s"))?,
            tau_f_log: real("critic.tau_f", get("critic.tau_f"))?,
            tau_b: real("critic.tau_b", get("critic.tau_b"))?,
            mask_fraction: real("critic.mask_fraction", get("critic.mask_fraction"))?,
            mask_policy: match get("critic.mask_policy") {
                "tfidf" => MaskPolicy::Tfidf,
                "random" => MaskPolicy::Random,
                other => return err(format!("critic.mask_policy: expected tfidf or random, got `{other}`")),
            },
            seed: num("critic.mask_seed", get("critic.mask_seed"))?,
            normalized: flag("critic.normalized", get("critic.normalized"))?,
        };
        critics.validate().map_err(|e| ConfigError(format!("critic: {e}")))?;

        let decode = DecodeParams {
            alpha: real("decode.alpha", get("decode.alpha"))?,
            top_p: real("decode.top_p", get("decode.top_p"))?,
            temperature: real("decode.temperature", get("decode.temperature"))?,
            max_doc_tokens: num("decode.max_doc_tokens", get("decode.max_doc_tokens"))?,
            min_summary_sentences: num("decode.min_summary_sentences", get("decode.min_summary_sentences"))?,
            max_summary_sentences: num("decode.max_summary_sentences", get("decode.max_summary_sentences"))?,
        };
        decode.validate().map_err(|e| ConfigError(format!("decode: {e}")))?;

        let thresholds = ControlThresholds {
            len_low: real("control.len_low", get("control.len_low"))?,
            len_high: real("control.len_high", get("control.len_high"))?,
            ext_low: real("control.ext_low", get("control.ext_low"))?,
            ext_high: real("control.ext_high", get("control.ext_high"))?,
            spec_high: real("control.spec_high", get("control.spec_high"))?,
        };
        thresholds.validate().map_err(|e| ConfigError(format!("control: {e}")))?;

        let prefix_files = match (path("prefix.cities"), path("prefix.media")) {
            (Some(c), Some(m)) => Some((c, m)),
            (None, None) => None,
            _ => return err("prefix.cities and prefix.media must be set together"),
        };
        let corpus = match get("corpus") {
            "synthetic" => CorpusSource::Synthetic,
            "" => return err("corpus must be `synthetic` or a file path"),
            _ => CorpusSource::File(path("corpus").expect("nonempty")),
        };

        let positive = |k: &str| -> Result<u64, ConfigError> {
            let v: u64 = num(k, get(k))?;
            if v == 0 {
                return err(format!("{k} must be at least 1"));
            }
            Ok(v)
        };
        let cfg = Self {
            store: base.join(get("store")),
            seed: num("seed", get("seed"))?,
            workers: positive("workers")? as usize,
            chunk: positive("chunk")? as usize,
            corpus,
            teacher: backend("teacher")?,
            critic: backend("critic")?,
            top_k: optional("remote.top_k", get("remote.top_k"))?,
            retry: RetryPolicy {
                max_attempts: positive("remote.max_attempts")? as u32,
                timeout: Duration::from_millis(positive("remote.timeout_ms")?),
                ..RetryPolicy::default()
            },
            critics,
            short_circuit: flag("critic.short_circuit", get("critic.short_circuit"))?,
            decode,
            prefix_files,
            thresholds,
            max_keywords: num("control.max_keywords", get("control.max_keywords"))?,
            candidates_init: num("candidates.init", get("candidates.init"))?,
            candidates_round: num("candidates.round", get("candidates.round"))?,
            rounds: num("iterate.rounds", get("iterate.rounds"))?,
            epochs: positive("iterate.epochs")?,
            balance_target: optional("export.balance_target", get("export.balance_target"))?,
            msttr_window: positive("stats.msttr_window")? as usize,
            values,
        };
        if cfg.values.get("store").is_none_or(|s| s.is_empty()) {
            return err("store must not be empty");
        }
        Ok(cfg)
    }

    /// Resolved settings as sorted `key = value` lines.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// sha256 over every setting that can change results.
    pub fn digest(&self) -> String {
        let text: String = self
            .values
            .iter()
            .filter(|(k, _)| !UNDIGESTED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        sha256_hex(text.as_bytes())
    }

    /// Candidate count for teacher round `round`.
    pub fn candidates(&self, round: u32) -> u64 {
        if round == 0 {
            self.candidates_init
        } else {
            self.candidates_round
        }
    }
}
