use std::sync::Arc;

use pmidistill::control::{
    bucketize, control_correlation, style_bucket, style_from_id, Attribute, CcSample, ControlThresholds,
};
use pmidistill::critics::{apply_critics, screen_pair, CriticConfig, MaskedView};
use pmidistill::generator::poe_next_distribution;
use pmidistill::scoring::{ConditionBlind, InfillScorer, LogDist, NgramBackend, NgramConfig, ScoreError, Vocab};
use pmidistill::text::{msttr, ngram_entropy, CorpusStats, ReferenceTagger, TokenSeq};
use pmidistill::Exact;
use proptest::prelude::*;

fn vocab(n: usize) -> Arc<Vocab> {
    Arc::new(Vocab::from_words((0..n.saturating_sub(5)).map(|i| format!("w{i}"))))
}

fn seq(words: &[String]) -> TokenSeq {
    TokenSeq::from_tokens(words.iter())
}

/// Deterministic scorer whose answers depend on the masked text and on
/// whether a condition is present.
struct Hashy;

impl InfillScorer<f64> for Hashy {
    fn infill_logprob(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<f64, ScoreError> {
        let mut h: u64 = 1469598103934665603;
        for s in masked.spans() {
            for t in &s.tokens {
                for b in t.bytes() {
                    h = (h ^ b as u64).wrapping_mul(1099511628211);
                }
            }
        }
        if let Some(c) = condition {
            h = h.wrapping_add(c.len() as u64).wrapping_mul(0x9e3779b97f4a7c15);
        }
        Ok(-((h % 4000) as f64) / 100.0 - masked.masked_count() as f64)
    }
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["mayor", "budget", "rose", "the", "of", "vote", "city", ".", ","]), 1..40)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn with_content(v: Vec<String>) -> Vec<String> {
    let mut v = v;
    v.push("council".into());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn poe_ignores_additive_shifts(
        c in prop::collection::vec(-8.0f64..0.0, 6..=10),
        u in prop::collection::vec(-8.0f64..0.0, 6..=10),
        alpha in 0.0f64..3.0,
        s1 in -50.0f64..50.0,
        s2 in -50.0f64..50.0,
    ) {
        let n = c.len().min(u.len());
        let v = vocab(n);
        let cond = LogDist::from_log_weights(v.clone(), c[..n].to_vec()).unwrap();
        let uncond = LogDist::from_log_weights(v.clone(), u[..n].to_vec()).unwrap();
        let base = poe_next_distribution(&cond, &uncond, alpha).unwrap();
        let cs = LogDist::new(v.clone(), cond.values().iter().map(|x| x + s1).collect()).unwrap();
        let us = LogDist::new(v.clone(), uncond.values().iter().map(|x| x + s2).collect()).unwrap();
        let shifted = poe_next_distribution(&cs, &us, alpha).unwrap();
        if alpha == 0.0 {
            prop_assert_eq!(shifted, cs);
        } else {
            for (a, b) in base.values().iter().zip(shifted.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn poe_with_uniform_penalty_is_conditional(c in prop::collection::vec(-8.0f64..0.0, 6..=10), alpha in 0.0f64..3.0) {
        let v = vocab(c.len());
        let cond = LogDist::from_log_weights(v.clone(), c).unwrap();
        let got = poe_next_distribution(&cond, &LogDist::uniform(v), alpha).unwrap();
        for (a, b) in got.values().iter().zip(cond.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diversity_bounds(docs in prop::collection::vec(words(), 1..8), window in 1usize..12) {
        let corpus: Vec<TokenSeq> = docs.iter().map(|d| seq(d)).collect();
        let total: usize = corpus.iter().map(TokenSeq::len).sum();
        for n in [2usize, 3] {
            let grams: usize = corpus.iter().map(|d| d.len().saturating_sub(n - 1)).sum();
            match ngram_entropy::<f64>(&corpus, n) {
                Ok(h) => prop_assert!(h >= 0.0 && h <= (grams as f64).log2() + 1e-12),
                Err(_) => prop_assert_eq!(grams, 0),
            }
        }
        match msttr::<f64>(&corpus, window) {
            Ok(m) => prop_assert!(m >= 100.0 / window as f64 - 1e-12 && m <= 100.0),
            Err(_) => prop_assert!(total < window),
        }
        // Exact evaluation agrees with floating point.
        if let Ok(m) = msttr::<Exact>(&corpus, window) {
            prop_assert!((pmidistill::Scalar::to_f64_lossy(&m) - msttr::<f64>(&corpus, window).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn stricter_thresholds_never_admit_more(
        x in words(),
        y in words(),
        tau_s in -5.0f64..5.0,
        tau_f in -5.0f64..5.0,
        tau_b in 0.05f64..1.0,
        bump in 0.0f64..3.0,
    ) {
        let (x, y) = (seq(&with_content(x)), seq(&with_content(y)));
        let stats = CorpusStats::default();
        let loose = CriticConfig::<f64> { tau_s_log: tau_s, tau_f_log: tau_f, tau_b, ..CriticConfig::default() };
        let strict = CriticConfig::<f64> {
            tau_s_log: tau_s + bump,
            tau_f_log: tau_f + bump,
            tau_b: (tau_b - bump / 10.0).max(0.01),
            ..CriticConfig::default()
        };
        let a = apply_critics(&x, &y, &loose, &Hashy, &stats).unwrap();
        let b = apply_critics(&x, &y, &strict, &Hashy, &stats).unwrap();
        prop_assert!(!b.pass_b || a.pass_b);
        prop_assert!(b.pass_s != Some(true) || a.pass_s == Some(true));
        prop_assert!(b.pass_f != Some(true) || a.pass_f == Some(true));
        prop_assert_eq!(screen_pair(&x, &y, &loose, &Hashy, &stats).unwrap().pass_all(), a.pass_all());
        prop_assert_eq!(screen_pair(&x, &y, &strict, &Hashy, &stats).unwrap().pass_all(), b.pass_all());
    }

    #[test]
    fn condition_blind_scorer_carries_no_information(x in words(), y in words()) {
        let (x, y) = (seq(&with_content(x)), seq(&with_content(y)));
        let v = apply_critics(&x, &y, &CriticConfig::<f64>::default(), &ConditionBlind(Hashy), &CorpusStats::default()).unwrap();
        prop_assert_eq!(v.pmi_saliency, Some(0.0));
        prop_assert_eq!(v.pmi_faithfulness, Some(0.0));
        prop_assert!(!v.pass_all());
    }

    #[test]
    fn control_correlation_sign_law(
        lens in prop::collection::vec((1usize..60, 1usize..60), 1..10),
        levels in prop::collection::vec((0usize..3, 1usize..3), 1..10),
    ) {
        let names = ["short", "medium", "long"];
        let tagger = ReferenceTagger::default();
        let make = |swap: bool| -> Vec<CcSample> {
            lens.iter().zip(levels.iter().cycle()).map(|(&(la, lb), &(a, step))| {
                let b = (a + step) % 3;
                let (ya, yb) = (vec!["word"; la].join(" "), vec!["word"; lb].join(" "));
                let (va, vb) = (names[a].to_string(), names[b].to_string());
                if swap {
                    CcSample { document: "d".into(), attribute: Attribute::Length, value_a: vb, summary_a: yb, value_b: va, summary_b: ya }
                } else {
                    CcSample { document: "d".into(), attribute: Attribute::Length, value_a: va, summary_a: ya, value_b: vb, summary_b: yb }
                }
            }).collect()
        };
        let forward: Exact = control_correlation(&make(false), &tagger).unwrap();
        let swapped: Exact = control_correlation(&make(true), &tagger).unwrap();
        // Relabelling which side is "a" leaves the signed change unchanged.
        prop_assert_eq!(forward, swapped);
        // Exchanging the summaries between the two controls negates it.
        let inverted: Vec<CcSample> = make(false).into_iter().map(|mut s| {
            std::mem::swap(&mut s.summary_a, &mut s.summary_b);
            s
        }).collect();
        let inv: Exact = control_correlation(&inverted, &tagger).unwrap();
        prop_assert_eq!(inv, -forward);
    }

    #[test]
    fn buckets_are_consistent_and_ordered(
        len in 0u64..200, ext_num in 0u64..=100, spe_num in 0u64..200, more in 0u64..50,
    ) {
        let t = ControlThresholds::<Exact>::default();
        let (l, e, s) = bucketize(&Exact::from(len as i64), &Exact::new(ext_num as i64, 100), &Exact::new(spe_num as i64, 20), &t);
        let id = style_bucket(l, e, s);
        prop_assert!(id < 18);
        prop_assert_eq!(style_from_id(id), Some((l, e, s)));
        let (l2, e2, s2) = bucketize(
            &Exact::from((len + more) as i64),
            &Exact::new((ext_num + more).min(100) as i64, 100),
            &Exact::new((spe_num + more) as i64, 20),
            &t,
        );
        prop_assert!(l2 >= l && e2 >= e && s2 >= s);
    }
}

#[test]
fn every_style_bucket_is_reachable() {
    let t = ControlThresholds::<Exact>::default();
    let lens = [Exact::from(10), Exact::from(50), Exact::from(90)];
    let exts = [Exact::new(1, 10), Exact::new(4, 10), Exact::new(9, 10)];
    let spes = [Exact::from(1), Exact::from(10)];
    let mut seen = [false; 18];
    for l in &lens {
        for e in &exts {
            for s in &spes {
                let (a, b, c) = bucketize(l, e, s, &t);
                seen[style_bucket(a, b, c) as usize] = true;
            }
        }
    }
    assert!(seen.iter().all(|&s| s));
    assert_eq!(style_from_id(18), None);
}

#[test]
fn critics_are_generic_over_the_float_type() {
    let corpus: Vec<TokenSeq> = ["the mayor signed the city budget .", "the council rose to vote on the budget ."]
        .iter()
        .map(|s| TokenSeq::from_tokens(s.split_whitespace()))
        .collect();
    let model = NgramBackend::train(&corpus, NgramConfig { order: 2, smoothing: 0.5, cache_weight: 1.0 }).unwrap();
    let stats = CorpusStats::build(corpus.iter());
    let x = TokenSeq::from_tokens("the mayor signed the budget after the council vote .".split_whitespace());
    let y = TokenSeq::from_tokens("mayor signed budget".split_whitespace());
    let a = apply_critics(&x, &y, &CriticConfig::<f64>::default(), &model, &stats).unwrap();
    let b = apply_critics(&x, &y, &CriticConfig::<f32>::default(), &model, &stats).unwrap();
    assert!((a.pmi_saliency.unwrap() - b.pmi_saliency.unwrap() as f64).abs() < 1e-4);
    assert!((a.pmi_faithfulness.unwrap() - b.pmi_faithfulness.unwrap() as f64).abs() < 1e-4);
}
