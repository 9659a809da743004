mod common;

use std::collections::BTreeMap;

use common::synth::{self, LIT_SENTENCE, LIT_VERB_INDEX};
use common::*;
use metaphor_core::adapters::fake::{FakeSeq2Seq, Fixture};
use metaphor_core::adapters::Seq2Seq;
use metaphor_core::detector::{filter_lines, DetectorConfig};
use metaphor_core::enhancer::pick_target;
use metaphor_core::evaluator::{corpus_bleu2, embedding_f1, lexrep_generate};
use metaphor_core::generator::{generate_candidates, rerank, tune_lambda, RescoringConfig};
use metaphor_core::literalizer::{literalize, LiteralizeConfig};
use metaphor_core::types::{LiteralMetaphorPair, Sentence, SymbolBeamSet};
use proptest::prelude::*;
use serde_json::json;

#[test]
fn rerank_matches_brute_force_sort() {
    let mut r = synth::rng(11);
    for _ in 0..200 {
        let set = synth::hypothesis_set(&mut r);
        for lambda in [0.0, 0.25, 1.0, 3.5] {
            let got: Vec<Vec<String>> = rerank(set.hyps.clone(), lambda, &set.registry)
                .unwrap()
                .into_iter()
                .map(|h| h.tokens)
                .collect();
            assert_eq!(got, oracle::rerank_order(&set.rows, lambda));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Raising λ never lets a lower-disc hypothesis overtake an equal-nll rival.
    #[test]
    fn higher_disc_wins_on_equal_nll(nll in 0u32..16, d1 in 0u32..8, d2 in 0u32..8, l1 in 1u32..16, l2 in 1u32..16) {
        prop_assume!(d1 != d2);
        let lp = -(nll as f64) * 0.25;
        let reg = registry_from_json(&json!({"sentence_scores": {"by_text": {
            "a": d1 as f64 * 0.125, "b": d2 as f64 * 0.125
        }}}).to_string());
        let h = |t: &str| metaphor_core::types::DecodedHypothesis::new(vec![t.into()], vec![lp]).unwrap();
        let winner = if d1 > d2 { "a" } else { "b" };
        for lambda in [l1 as f64 * 0.25, (l1 + l2) as f64 * 0.25] {
            let out = rerank(vec![h("a"), h("b")], lambda, &reg).unwrap();
            prop_assert_eq!(&out[0].tokens[0], winner);
        }
    }
}

#[test]
fn generation_picks_the_argmin_of_all_samples() {
    let reg = demo_registry();
    for text in [
        "The scream filled the night",
        "The tax cut will help the economy",
        "We walked in silence to the river bend",
        "The soldiers carried banners through the gate",
    ] {
        for seed in 0..20 {
            let s = Sentence::user(text).unwrap();
            let cfg = RescoringConfig { seed, ..Default::default() };
            let ranked = generate_candidates(&s, &cfg, &reg).unwrap();
            let sampled = reg.seq2seq.sample(text, cfg.k, cfg.num_hypotheses, seed).unwrap();
            let best = sampled
                .iter()
                .map(|h| {
                    let t = metaphor_core::generator::hypothesis_text(Some(text), h);
                    let disc = reg.sentence_scorer.score_sentence(&t).unwrap();
                    let nll: f64 = h.token_logprobs.iter().map(|x| -x).sum();
                    (nll - cfg.lambda * disc, nll, t)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
                .unwrap();
            assert_eq!(ranked[0].text, best.2, "{text} seed {seed}");
            assert!((ranked[0].combined() - best.0).abs() < 1e-12);
        }
    }
}

#[test]
fn literalize_matches_exhaustive_enumeration() {
    let mut r = synth::rng(5);
    let s = Sentence::user(LIT_SENTENCE).unwrap();
    for _ in 0..60 {
        let reg = synth::literalize_table(&mut r);
        let v = verb(&s, "drifted", &reg);
        for overlap in [5, 4, 1] {
            let cfg = LiteralizeConfig { required_overlap: overlap, ..Default::default() };
            let got = literalize(&s, &v, &cfg, &reg)
                .unwrap()
                .map(|p| (p.literal_text, p.literal_verb));
            let want = oracle::literalize(LIT_SENTENCE, LIT_VERB_INDEX, 200, overlap, &reg);
            assert_eq!(got, want);
        }
    }
}

#[test]
fn literalize_three_candidate_fixture() {
    // walked: 5/5, p .3, lm .3; crept: 5/5 (reordered), p .3, lm .2;
    // floated: 4/5, p .1. The lm tie-break decides between the survivors.
    let reg = registry_from_json(
        &json!({
            "masked": {"predictions": {"The ghost [MASK] across the field": [["walked", 0.3], ["crept", 0.2], ["floated", 0.1]]}},
            "verb_scores": {"by_surface": {"walked": 0.3, "crept": 0.3, "floated": 0.1}},
            "symbols": {"by_lemma": {
                "drift": ["a", "b", "c", "d", "e"],
                "walk": ["a", "b", "c", "d", "e"],
                "creep": ["e", "d", "c", "b", "a"],
                "float": ["a", "b", "c", "d", "x"]
            }}
        })
        .to_string(),
    );
    let s = Sentence::user(LIT_SENTENCE).unwrap();
    let v = verb(&s, "drifted", &reg);
    let got = literalize(&s, &v, &LiteralizeConfig::default(), &reg).unwrap().unwrap();
    assert_eq!(got.literal_verb, "walked");
    assert_eq!(
        Some((got.literal_text.clone(), got.literal_verb.clone())),
        oracle::literalize(LIT_SENTENCE, LIT_VERB_INDEX, 200, 5, &reg)
    );
    assert_eq!(got.symbols, SymbolBeamSet::new(["a", "b", "c", "d", "e"]).unwrap());
}

#[test]
fn tighter_overlap_never_grows_survivors() {
    let mut r = synth::rng(9);
    let s = Sentence::user(LIT_SENTENCE).unwrap();
    for _ in 0..20 {
        let reg = synth::literalize_table(&mut r);
        let v = verb(&s, "drifted", &reg);
        let found: Vec<bool> = (1..=5)
            .map(|o| {
                let cfg = LiteralizeConfig { required_overlap: o, ..Default::default() };
                literalize(&s, &v, &cfg, &reg).unwrap().is_some()
            })
            .collect();
        for w in found.windows(2) {
            assert!(w[0] || !w[1], "survivor appeared when tightening: {found:?}");
        }
    }
}

#[test]
fn ten_line_filter_matches_brute_force() {
    let lines: Vec<String> = read_lines("poetry50.txt").into_iter().take(10).collect();
    let reg = demo_registry();
    let (kept, report) = filter_lines(&lines, &DetectorConfig::default(), &reg).unwrap();
    let want = oracle::retained_lines(&lines, 0.95, &reg);
    let got: Vec<usize> = kept.iter().map(|k| k.id.trim_start_matches("line-").parse().unwrap()).collect();
    assert_eq!(got, want);
    assert_eq!(report.total_lines, 10);
    assert_eq!(report.retained_high_confidence, kept.len());
    assert!(report.predicted_metaphoric >= report.retained_high_confidence);
    assert_eq!(report.total_lines, report.retained_high_confidence + report.rejected + report.skipped_errors);
}

#[test]
fn filter_skips_failing_lines() {
    let reg = registry_from_json(r#"{"verb_scores": {"default": 0.99, "fail_on": ["broken"]}}"#);
    let lines = ["The wind moved", "The broken wind moved", "", "night night"];
    let (kept, report) = filter_lines(&lines, &DetectorConfig::default(), &reg).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(report.skipped_errors, 1);
    assert_eq!(report.rejected, 2);
    let (kept, report) = filter_lines::<&str>(&[], &DetectorConfig::default(), &reg).unwrap();
    assert!(kept.is_empty());
    assert_eq!((report.total_lines, report.predicted_metaphoric, report.retained_high_confidence), (0, 0, 0));
}

#[test]
fn bleu2_hand_computation() {
    // hyp1 "the cat sat on a mat" vs ref "the cat sat on the mat":
    //   unigrams 5/6 clipped (the:1, cat, sat, on, mat), bigrams 3/5 (the cat, cat sat, sat on).
    // hyp2 "a dog barks" vs refs "a dog barked" / "the dog barks loudly":
    //   unigrams 3/3 (a, dog, barks), bigrams 2/2 (a dog, dog barks).
    // Totals: p1 = 8/9, p2 = 5/7; c = 9, r = 6 + 3 = 9 → BP = 1.
    let hyps = ["the cat sat on a mat", "a dog barks"];
    let refs = vec![vec!["the cat sat on the mat"], vec!["a dog barked", "the dog barks loudly"]];
    let expected = 100.0 * ((8.0 / 9.0) * (5.0 / 7.0) as f64).sqrt();
    let got = corpus_bleu2(&hyps, &refs).unwrap();
    assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
}

#[test]
fn embedding_f1_hand_computation() {
    // Hypothesis tokens a, b, c; reference tokens a, d.
    let reg = registry_from_json(
        r#"{"embedder": {"dim": 2, "token_vectors": {
            "a": [1, 0], "b": [0, 1], "c": [0.6, 0.8], "d": [0.8, 0.6]
        }}}"#,
    );
    // cos(a,a)=1, cos(a,d)=.8; cos(b,a)=0, cos(b,d)=.6; cos(c,a)=.6, cos(c,d)=.96
    let p = (1.0 + 0.6 + 0.96) / 3.0;
    // ref a → max(1, 0, .6) = 1; ref d → max(.8, .6, .96) = .96
    let r = (1.0 + 0.96) / 2.0;
    let f = 2.0 * p * r / (p + r);
    let got = embedding_f1("a b c", "a d", &*reg.embedder).unwrap();
    assert!((got - f).abs() < 1e-9, "{got} vs {f}");
}

#[test]
fn lexrep_three_candidate_brute_force() {
    let reg = registry_from_json(
        &json!({
            "masked": {"predictions": {"The ghost [MASK] across the field": [["danced", 0.3], ["burned", 0.2], ["walked", 0.1]]}},
            "verb_scores": {"by_surface": {"danced": 0.9, "burned": 0.8, "walked": 0.05}},
            "symbols": {"by_lemma": {
                "drift": ["a", "b", "c", "d", "e"],
                "dance": ["a", "b", "x", "y", "z"],
                "burn": ["a", "b", "c", "y", "z"],
                "walk": ["a", "b", "c", "d", "e"]
            }}
        })
        .to_string(),
    );
    let s = Sentence::user(LIT_SENTENCE).unwrap();
    let v = verb(&s, "drifted", &reg);
    // Metaphoric candidates: danced (2/5), burned (3/5); walked is literal.
    let out = lexrep_generate(&s, &v, &reg).unwrap();
    assert_eq!(out.text, "The ghost burned across the field");
    assert_eq!(out.symbol_overlap, Some(3));
}

#[test]
fn seq2seq_samples_stay_in_top_k() {
    let fx = Fixture::from_json(
        r#"{"seq2seq": {"substitutions": {"walk": [["walked", 0.3], ["ran", 0.3], ["flew", 0.2], ["sat", 0.1], ["fell", 0.05], ["rose", 0.05]]}}}"#,
    )
    .unwrap();
    let fake = FakeSeq2Seq::new(std::sync::Arc::new(fx));
    let src = "She walked home";
    let steps = fake.step_distributions(src);
    for k in 1..=6 {
        for seed in 0..10 {
            for h in fake.sample(src, k, 10, seed).unwrap() {
                for (i, tok) in h.tokens.iter().enumerate() {
                    let allowed: Vec<&String> = steps[i].iter().take(k).map(|(t, _)| t).collect();
                    assert!(allowed.contains(&tok), "{tok} outside top-{k}");
                }
            }
        }
    }
    // k=1 is greedy and seed-independent.
    assert_eq!(fake.sample(src, 1, 3, 1).unwrap(), fake.sample(src, 1, 3, 99).unwrap());
}

#[test]
fn seq2seq_equiprobable_multiset_is_reproducible() {
    let fx = Fixture::from_json(r#"{"seq2seq": {"substitutions": {"walk": [["walked", 0.5], ["danced", 0.5]]}}}"#).unwrap();
    let fake = FakeSeq2Seq::new(std::sync::Arc::new(fx));
    let multiset = |seed| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for h in fake.sample("She walked home", 5, 10, seed).unwrap() {
            *m.entry(h.tokens[1].clone()).or_default() += 1;
            assert_eq!(h.token_logprobs[1], 0.5f64.ln());
        }
        m
    };
    let a = multiset(3);
    assert_eq!(a, multiset(3));
    assert_eq!(a.values().sum::<usize>(), 10);
    assert!(a.keys().all(|k| k == "walked" || k == "danced"));
}

fn pair(literal: &str) -> LiteralMetaphorPair {
    LiteralMetaphorPair {
        literal_text: literal.into(),
        metaphor_text: literal.into(),
        verb_token_index: 0,
        literal_verb: String::new(),
        metaphor_verb: String::new(),
        symbols: SymbolBeamSet::new(["a", "b", "c", "d", "e"]).unwrap(),
        p_literal_of_replacement: 0.5,
    }
}

#[test]
fn tune_lambda_grid_search() {
    // nll: walked ln 2 = .693, flew −ln .35 = 1.050, roared −ln .15 = 1.897.
    // disc: walked 0, flew .7, roared 1.0. The argmin of nll − λ·disc is
    // walked for λ < .51, flew for .51 < λ < 2.82, roared above.
    // Objective ½(disc + cos): walked .5, flew ½(.7 + .8) = .75, roared .5.
    let reg = registry_from_json(
        &json!({
            "seq2seq": {"substitutions": {"walk": [["walked", 0.5], ["flew", 0.35], ["roared", 0.15]]}},
            "sentence_scores": {"metaphoric_verbs": {"flew": 0.7, "roared": 1.0}, "unlisted_verb": 0.0},
            "embedder": {"dim": 2, "vectors": {
                "She walked home": [1, 0], "She flew home": [0.8, 0.6], "She roared home": [0, 1]
            }}
        })
        .to_string(),
    );
    let base = RescoringConfig { k: 5, num_hypotheses: 40, seed: 1, lambda: 0.0 };
    let pairs = vec![pair("She walked home")];
    let grid = [0.0, 0.5, 1.0, 4.0];
    let report = tune_lambda(&pairs, &grid, &base, &reg).unwrap();

    // Exhaustive evaluation of the grid is the oracle.
    let objective = |lambda: f64| {
        let s = Sentence::user("She walked home").unwrap();
        let cfg = RescoringConfig { lambda, ..base };
        let best = generate_candidates(&s, &cfg, &reg).unwrap().remove(0);
        metaphor_core::generator::tuning_objective(&s.text, &best.text, &reg).unwrap()
    };
    let want: Vec<f64> = grid.iter().map(|l| objective(*l)).collect();
    let got: Vec<f64> = report.scores.iter().map(|s| s.objective).collect();
    assert_eq!(got, want);
    for (o, hand) in got.iter().zip([0.5, 0.5, 0.75, 0.5]) {
        assert!((o - hand).abs() < 1e-9, "{got:?}");
    }
    assert_eq!(report.best_lambda, 1.0);
}

#[test]
fn tune_lambda_ties_choose_smallest() {
    let reg = demo_registry();
    let pairs = vec![pair("The sky is grey")];
    let report = tune_lambda(&pairs, &[1.0, 0.5], &RescoringConfig::default(), &reg).unwrap();
    assert_eq!(report.scores[0].objective, report.scores[1].objective);
    assert_eq!(report.best_lambda, 0.5);
}

#[test]
fn pick_target_matches_brute_force_on_quatrains() {
    let reg = demo_registry();
    let stop = metaphor_core::detector::default_stop_verbs();
    let lines = read_lines("quatrains30.txt");
    let split = metaphor_core::enhancer::split_quatrains(&lines, "fixture");
    assert_eq!(split.quatrains.len(), 30);
    for q in &split.quatrains {
        let got = pick_target(q, &reg, &stop).unwrap().map(|t| (t.line_index, t.verb.token_index, t.p_literal));
        assert_eq!(got, oracle::pick_target(&q.lines, &reg, &stop));
    }
}
