//! Seeded generators for synthetic fixtures.

use std::collections::BTreeMap;

use metaphor_core::adapters::AdapterRegistry;
use metaphor_core::lexicon::LEXICON;
use metaphor_core::types::DecodedHypothesis;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::registry_from_json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &["stars", "river", "night", "wind", "burns", "sings", "falls", "quiet", "stone", "dawn"];

/// A random hypothesis set of 1..=20 entries with dyadic log-probabilities
/// and discriminator scores (exact in binary floating point), plus a
/// registry whose sentence scorer returns those scores.
pub struct HypothesisSet {
    pub hyps: Vec<DecodedHypothesis>,
    pub rows: Vec<(Vec<String>, Vec<f64>, f64)>,
    pub registry: AdapterRegistry,
}

pub fn hypothesis_set(r: &mut ChaCha8Rng) -> HypothesisSet {
    let n = r.random_range(1..=20);
    let mut disc_by_text: BTreeMap<String, f64> = BTreeMap::new();
    let mut rows = Vec::new();
    for _ in 0..n {
        let len = r.random_range(1..=4);
        let toks: Vec<String> = (0..len).map(|_| WORDS.choose(r).unwrap().to_string()).collect();
        let lps: Vec<f64> = (0..len).map(|_| -(r.random_range(0..=8) as f64) * 0.25).collect();
        let text = toks.join(" ");
        let disc = *disc_by_text
            .entry(text)
            .or_insert_with(|| r.random_range(0..=8) as f64 * 0.125);
        rows.push((toks, lps, disc));
    }
    let registry = registry_from_json(&json!({ "sentence_scores": { "by_text": disc_by_text } }).to_string());
    let hyps = rows
        .iter()
        .map(|(t, l, _)| DecodedHypothesis::new(t.clone(), l.clone()).unwrap())
        .collect();
    HypothesisSet { hyps, rows, registry }
}

pub const LIT_SENTENCE: &str = "The ghost drifted across the field";
pub const LIT_VERB_INDEX: usize = 2;

const INPUT_SYMBOLS: [&str; 5] = ["love", "loss", "despair", "sorrow", "loneliness"];
const NEAR_SYMBOLS: [&str; 5] = ["love", "loss", "despair", "sorrow", "fear"];
const FAR_SYMBOLS: [&str; 5] = ["peace", "love", "happiness", "joy", "hope"];

/// A random masked-prediction table of up to 200 candidates for
/// [`LIT_SENTENCE`]. Candidate lemmas get the input's symbols, a 4/5 set, a
/// 1/5 set, or nothing; scores are coarse so that ties happen.
pub fn literalize_table(r: &mut ChaCha8Rng) -> AdapterRegistry {
    let mut pasts: Vec<(String, String)> = LEXICON
        .lemmas()
        .iter()
        .filter(|l| **l != "drift")
        .filter_map(|l| Some((l.to_string(), LEXICON.past_of(l)?)))
        .collect();
    pasts.sort();
    pasts.dedup_by(|a, b| a.1 == b.1);
    pasts.shuffle(r);
    let n = r.random_range(1..=200).min(pasts.len());
    let mut preds = Vec::new();
    let mut by_surface = BTreeMap::new();
    let mut by_lemma = BTreeMap::new();
    by_lemma.insert("drift".to_string(), INPUT_SYMBOLS.to_vec());
    let budget = 0.9 / n as f64;
    for (lemma, past) in pasts.iter().take(n) {
        preds.push(json!([past, (r.random_range(1..=10) as f64) * budget / 10.0]));
        by_surface.insert(past.clone(), r.random_range(0..=20) as f64 / 20.0);
        match r.random_range(0..4) {
            0 => {
                by_lemma.insert(lemma.clone(), INPUT_SYMBOLS.to_vec());
            }
            1 => {
                by_lemma.insert(lemma.clone(), NEAR_SYMBOLS.to_vec());
            }
            2 => {
                by_lemma.insert(lemma.clone(), FAR_SYMBOLS.to_vec());
            }
            _ => {}
        }
    }
    // The original verb and a non-verb also compete.
    preds.push(json!(["drifted", 0.05]));
    preds.push(json!(["quietly", 0.04]));
    registry_from_json(
        &json!({
            "masked": { "predictions": { "The ghost [MASK] across the field": preds } },
            "verb_scores": { "by_surface": by_surface, "default": 0.5 },
            "symbols": { "by_lemma": by_lemma },
        })
        .to_string(),
    )
}

/// `n` corpus lines built from templates, with a few blanks.
pub fn corpus_lines(n: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    let subjects = ["The river", "My heart", "The old house", "Her voice", "The wind", "A candle", "The city", "Time"];
    let tails = ["through the night", "across the hills", "into the sea", "beneath the stars", "along the road"];
    let verbs: Vec<String> = {
        let mut v: Vec<String> = LEXICON.lemmas().iter().filter_map(|l| LEXICON.past_of(l)).collect();
        v.sort();
        v.dedup();
        v
    };
    (0..n)
        .map(|_| {
            if r.random_range(0..25) == 0 {
                return String::new();
            }
            let s = subjects.choose(&mut r).unwrap();
            let v = verbs.choose(&mut r).unwrap();
            let t = tails.choose(&mut r).unwrap();
            if r.random_bool(0.3) {
                let v2 = verbs.choose(&mut r).unwrap();
                format!("{s} {v} and {v2} {t}")
            } else {
                format!("{s} {v} {t}")
            }
        })
        .collect()
}
