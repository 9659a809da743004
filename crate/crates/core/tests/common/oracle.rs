//! Brute-force reference implementations used to check the library.

use std::collections::{BTreeSet, HashSet};

use metaphor_core::adapters::AdapterRegistry;
use metaphor_core::types::{DecodedHypothesis, Sentence, SentenceSource, VerbOccurrence};

/// Sorts hypotheses by (nll − λ·disc, nll, text) with plain arithmetic.
pub fn rerank_order(hyps: &[(Vec<String>, Vec<f64>, f64)], lambda: f64) -> Vec<Vec<String>> {
    let mut rows: Vec<(f64, f64, String, Vec<String>)> = hyps
        .iter()
        .map(|(toks, lps, disc)| {
            let mut nll = 0.0;
            for lp in lps {
                nll -= lp;
            }
            (nll - lambda * disc, nll, toks.join(" "), toks.clone())
        })
        .collect();
    // Insertion sort: deliberately unlike the library's sort.
    for i in 1..rows.len() {
        let mut j = i;
        while j > 0 && less(&rows[j], &rows[j - 1]) {
            rows.swap(j, j - 1);
            j -= 1;
        }
    }
    rows.into_iter().map(|r| r.3).collect()
}

fn less(a: &(f64, f64, String, Vec<String>), b: &(f64, f64, String, Vec<String>)) -> bool {
    if a.0 != b.0 {
        return a.0 < b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

pub fn tokens_of(h: &DecodedHypothesis) -> Vec<String> {
    h.tokens.clone()
}

/// Exhaustive literalization over a whitespace-tokenized sentence: every
/// prediction is substituted, checked for verb-hood, symbol overlap and
/// scored, and the survivor with the smallest (p_meta, −lm_prob, surface)
/// wins. Returns (literal_text, literal_verb).
pub fn literalize(
    text: &str,
    verb_index: usize,
    n_candidates: usize,
    required_overlap: usize,
    registry: &AdapterRegistry,
) -> Option<(String, String)> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let original = words[verb_index];
    let original_lemma = tagged_lemma(text, verb_index, registry)?;
    let mut masked = words.clone();
    masked[verb_index] = "[MASK]";
    let preds = registry
        .masked_predictor
        .predict_masked(&masked.join(" "), n_candidates)
        .ok()?;
    let input: BTreeSet<String> = registry
        .symbolizer
        .symbols_of(text)
        .ok()?
        .beams()
        .iter()
        .cloned()
        .collect();

    let mut best: Option<(f64, f64, String, String)> = None;
    for p in preds {
        if p.surface.to_lowercase() == original.to_lowercase() {
            continue;
        }
        let mut w = words.clone();
        w[verb_index] = &p.surface;
        let cand = w.join(" ");
        let Some(lemma) = tagged_lemma(&cand, verb_index, registry) else { continue };
        if lemma == original_lemma {
            continue;
        }
        let Ok(syms) = registry.symbolizer.symbols_of(&cand) else { continue };
        let overlap = syms.beams().iter().filter(|s| input.contains(*s)).count();
        if overlap < required_overlap {
            continue;
        }
        let s = Sentence::new("oracle", cand.clone(), SentenceSource::User).unwrap();
        let v = VerbOccurrence {
            sentence_id: "oracle".into(),
            token_index: verb_index,
            surface: p.surface.clone(),
            lemma,
        };
        let Ok(score) = registry.verb_scorer.score_verb(&s, &v) else { continue };
        let row = (score.p_metaphoric(), -p.prob, p.surface.clone(), cand);
        let better = match &best {
            None => true,
            Some(b) => (row.0, row.1, &row.2) < (b.0, b.1, &b.2),
        };
        if better {
            best = Some(row);
        }
    }
    best.map(|(_, _, surface, text)| (text, surface))
}

fn tagged_lemma(text: &str, index: usize, registry: &AdapterRegistry) -> Option<String> {
    let toks = metaphor_core::text::tokenize(text);
    registry.tagger.tag(&toks).into_iter().nth(index).flatten()
}

/// Per-line threshold check: the line is kept when any verb scores at or
/// above τ. Returns the kept 1-based line numbers.
pub fn retained_lines(lines: &[String], tau: f64, registry: &AdapterRegistry) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let Ok(s) = Sentence::new(format!("line-{}", i + 1), line.clone(), SentenceSource::PoetryCorpus) else {
            continue;
        };
        let verbs = metaphor_core::text::extract_verbs(&s, &*registry.tagger).unwrap();
        let mut keep = false;
        for v in &verbs {
            match registry.verb_scorer.score_verb(&s, v) {
                Ok(score) if score.p_metaphoric() >= tau => keep = true,
                Ok(_) => {}
                Err(_) => {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            out.push(i + 1);
        }
    }
    out
}

/// Every (line, verb) of a quatrain that is not a stop verb, and the one with
/// the largest p_literal (first in reading order on ties).
pub fn pick_target(lines: &[String; 4], registry: &AdapterRegistry, stop: &HashSet<String>) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (li, line) in lines.iter().enumerate() {
        let s = Sentence::new("q", line.clone(), SentenceSource::User).unwrap();
        for v in metaphor_core::text::extract_verbs(&s, &*registry.tagger).unwrap() {
            if stop.contains(&v.surface.to_lowercase()) || stop.contains(&v.lemma) {
                continue;
            }
            let p = registry.verb_scorer.score_verb(&s, &v).unwrap().p_literal();
            if best.is_none() || p > best.unwrap().2 {
                best = Some((li, v.token_index, p));
            }
        }
    }
    best
}
