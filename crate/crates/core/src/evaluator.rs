//! Automatic metrics and baseline generators.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::{AdapterRegistry, Embedder};
use crate::error::{Error, Result};
use crate::generator::{generate_metaphor, hypothesis_text, RescoringConfig};
use crate::literalizer::{mask_verb, symbol_overlap, LiteralizeConfig};
use crate::text::{replace_token, tokenize, verb_lemma_at};
use crate::types::{Sentence, SentenceSource, VerbOccurrence};

/// Additive floor for zero n-gram matches.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Metaphoric candidates kept by the lexical-replacement baseline.
pub const LEXREP_TOP: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub semantic_similarity: f64,
    pub bleu2: f64,
    pub embedding_f1: f64,
    pub n_items: usize,
}

/// Cosine similarity; 0 when either vector is zero. Identical vectors give
/// exactly 1.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a == b && a.iter().any(|x| *x != 0.0) {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// 100 × max(0, cosine) of the sentence embeddings.
pub fn semantic_similarity(input: &str, output: &str, registry: &AdapterRegistry) -> Result<f64> {
    if input.trim().is_empty() || output.trim().is_empty() {
        return Err(Error::invalid("similarity needs two non-empty texts"));
    }
    let a = registry.embedder.embed(input)?;
    let b = if input == output { a.clone() } else { registry.embedder.embed(output)? };
    Ok(100.0 * cosine(&a, &b).max(0.0))
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// Corpus-level BLEU-2 in [0, 100]: clipped unigram and bigram precisions
/// pooled over the corpus, equally weighted geometric mean, brevity penalty
/// against the closest reference length (shorter on ties). Case-sensitive.
pub fn corpus_bleu2<H, R>(hypotheses: &[H], references: &[Vec<R>]) -> Result<f64>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if hypotheses.len() != references.len() {
        return Err(Error::invalid(format!(
            "{} hypotheses but {} reference lists",
            hypotheses.len(),
            references.len()
        )));
    }
    if references.iter().any(|r| r.is_empty()) {
        return Err(Error::invalid("every item needs at least one reference"));
    }
    let mut matched = [0usize; 2];
    let mut total = [0usize; 2];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, refs) in hypotheses.iter().zip(references) {
        let h = words(h.as_ref());
        let refs: Vec<Vec<String>> = refs.iter().map(|r| words(r.as_ref())).collect();
        for n in 1..=2 {
            let hyp_counts = ngrams(&h, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &refs {
                for (g, c) in ngrams(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            matched[n - 1] += hyp_counts
                .iter()
                .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
            total[n - 1] += h.len().saturating_sub(n - 1);
        }
        hyp_len += h.len();
        ref_len += refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|l| (l.abs_diff(h.len()), *l))
            .unwrap_or(0);
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let log_p: f64 = (0..2)
        .map(|i| {
            let m = if matched[i] == 0 { BLEU_EPSILON } else { matched[i] as f64 };
            (m / total[i].max(1) as f64).ln()
        })
        .sum::<f64>()
        / 2.0;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok((100.0 * bp * log_p.exp()).clamp(0.0, 100.0))
}

/// Greedy-matching F1 over contextual token embeddings, in [0, 1].
pub fn embedding_f1(hypothesis: &str, reference: &str, embedder: &dyn Embedder) -> Result<f64> {
    if hypothesis.trim().is_empty() || reference.trim().is_empty() {
        return Err(Error::invalid("embedding F1 needs two non-empty texts"));
    }
    let h = embedder.embed_tokens(hypothesis)?;
    let r = if hypothesis == reference { h.clone() } else { embedder.embed_tokens(reference)? };
    Ok(greedy_f1(&h, &r))
}

fn greedy_f1(h: &[(String, Vec<f64>)], r: &[(String, Vec<f64>)]) -> f64 {
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let sims: Vec<Vec<f64>> = h
        .iter()
        .map(|(_, a)| r.iter().map(|(_, b)| cosine(a, b)).collect())
        .collect();
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / h.len() as f64;
    let recall = (0..r.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / r.len() as f64;
    if precision + recall <= 0.0 {
        return 0.0;
    }
    if precision == 1.0 && recall == 1.0 {
        return 1.0;
    }
    (2.0 * precision * recall / (precision + recall)).clamp(0.0, 1.0)
}

/// Best F1 over several references.
pub fn embedding_f1_multi<R: AsRef<str>>(hypothesis: &str, references: &[R], embedder: &dyn Embedder) -> Result<f64> {
    references
        .iter()
        .map(|r| embedding_f1(hypothesis, r.as_ref(), embedder))
        .try_fold(0.0f64, |best, f| Ok(best.max(f?)))
}

/// Aggregates the three metrics over aligned items. Similarity compares each
/// output with its input; BLEU-2 and F1 compare it with the references.
pub fn evaluate_system<S: AsRef<str> + Sync>(
    inputs: &[S],
    outputs: &[S],
    references: &[Vec<S>],
    registry: &AdapterRegistry,
) -> Result<MetricsReport> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::invalid("nothing to evaluate"));
    }
    if outputs.len() != n || references.len() != n {
        return Err(Error::invalid(format!(
            "misaligned lists: {n} inputs, {} outputs, {} reference lists",
            outputs.len(),
            references.len()
        )));
    }
    let bleu2 = corpus_bleu2(outputs, references)?;
    let per_item: Vec<Result<(f64, f64)>> = registry.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let out = outputs[i].as_ref();
                let sim = semantic_similarity(inputs[i].as_ref(), out, registry)?;
                let f1 = embedding_f1_multi(out, &references[i], &*registry.embedder)?;
                Ok((sim, f1))
            })
            .collect()
    })?;
    let (mut sim, mut f1) = (0.0, 0.0);
    for r in per_item {
        let (s, f) = r?;
        sim += s;
        f1 += f;
    }
    Ok(MetricsReport {
        semantic_similarity: sim / n as f64,
        bleu2,
        embedding_f1: f1 / n as f64,
        n_items: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexrepOutput {
    pub text: String,
    /// False when no metaphoric candidate survived and `text` is the input.
    pub substituted: bool,
    pub verb: Option<String>,
    pub symbol_overlap: Option<usize>,
}

#[derive(Debug, Clone)]
struct LexrepCandidate {
    surface: String,
    text: String,
    p_metaphoric: f64,
    lm_prob: f64,
    overlap: usize,
}

/// Lexical-replacement baseline: the masked language model proposes fills,
/// the [`LEXREP_TOP`] most metaphoric of them are reranked by symbol overlap
/// with the literal input (then p_metaphoric), and the winner is substituted.
/// Adapter failures degrade to the unchanged input.
pub fn lexrep_generate(literal: &Sentence, verb: &VerbOccurrence, registry: &AdapterRegistry) -> Result<LexrepOutput> {
    let masked = mask_verb(literal, verb)?;
    let unchanged = LexrepOutput {
        text: literal.text.clone(),
        substituted: false,
        verb: None,
        symbol_overlap: None,
    };
    let n = LiteralizeConfig::default().n_candidates;
    let predictions = match registry.masked_predictor.predict_masked(&masked, n) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("lexrep: masked prediction failed: {e}");
            return Ok(unchanged);
        }
    };
    let input_symbols = match registry.symbolizer.symbols_of(&literal.text) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("lexrep: input symbols unavailable: {e}");
            return Ok(unchanged);
        }
    };
    let slot = verb.token_index;
    let original = verb.surface.to_lowercase();
    let mut scored: Vec<LexrepCandidate> = Vec::new();
    for p in &predictions {
        if p.surface.to_lowercase() == original {
            continue;
        }
        let Ok(text) = replace_token(&masked, slot, &p.surface) else { continue };
        if tokenize(&text).get(slot).map(|t| t.text.as_str()) != Some(p.surface.as_str()) {
            continue;
        }
        let Some(lemma) = verb_lemma_at(&text, slot, &*registry.tagger) else { continue };
        if lemma == verb.lemma {
            continue;
        }
        let Ok(sentence) = Sentence::new(literal.id.clone(), text.clone(), SentenceSource::User) else { continue };
        let occ = VerbOccurrence {
            sentence_id: sentence.id.clone(),
            token_index: slot,
            surface: p.surface.clone(),
            lemma,
        };
        let Ok(score) = registry.verb_scorer.score_verb(&sentence, &occ) else { continue };
        if score.p_metaphoric() < 0.5 {
            continue;
        }
        scored.push(LexrepCandidate {
            surface: p.surface.clone(),
            text,
            p_metaphoric: score.p_metaphoric(),
            lm_prob: p.prob,
            overlap: 0,
        });
    }
    scored.sort_by(|a, b| b.p_metaphoric.total_cmp(&a.p_metaphoric));
    scored.truncate(LEXREP_TOP);
    scored.retain_mut(|c| match registry.symbolizer.symbols_of(&c.text) {
        Ok(s) => {
            c.overlap = symbol_overlap(&input_symbols, &s);
            true
        }
        Err(_) => false,
    });
    let best = scored.into_iter().min_by(|a, b| {
        b.overlap
            .cmp(&a.overlap)
            .then_with(|| b.p_metaphoric.total_cmp(&a.p_metaphoric))
            .then_with(|| b.lm_prob.total_cmp(&a.lm_prob))
            .then_with(|| a.surface.cmp(&b.surface))
    });
    Ok(match best {
        Some(c) => LexrepOutput {
            text: c.text,
            substituted: true,
            verb: Some(c.surface),
            symbol_overlap: Some(c.overlap),
        },
        None => unchanged,
    })
}

/// Metaphor-masking baseline: the literal verb is masked and the sequence
/// model (trained on the masked dataset variant) fills the sentence.
pub fn meta_m_generate(
    literal: &Sentence,
    verb: &VerbOccurrence,
    rescoring: &RescoringConfig,
    registry: &AdapterRegistry,
) -> Result<String> {
    let masked = Sentence::new(literal.id.clone(), mask_verb(literal, verb)?, literal.source)?;
    let best = generate_metaphor(&masked, rescoring, registry)?;
    Ok(hypothesis_text(Some(&masked.text), &best))
}
