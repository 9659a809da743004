//! Deterministic fixture-driven adapters.
//!
//! A [`Fixture`] is one JSON document holding a table per slot. Every fake is
//! a pure function of its inputs, the fixture, and (for sampling) the seed;
//! lookups that miss the tables fall back to hash-seeded values so that any
//! text gets a reproducible answer.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    check_masked_request, check_text, finalize_predictions, normalize_unit, Adapter, Embedder,
    MaskedPrediction, MaskedPredictor, Seq2Seq, SentenceScorer, Symbolizer, VerbScorer,
};
use crate::error::{Error, Result};
use crate::lexicon::LEXICON;
use crate::text::{normalize_whitespace, tokenize, PosTagger, RuleTagger, MASK_TOKEN};
use crate::types::{DecodedHypothesis, MetaphoricityScore, Sentence, SymbolBeamSet, VerbOccurrence};

/// Stable 64-bit digest of `domain` and `text`.
pub fn stable_hash(domain: &str, text: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(domain.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

fn rng_for(domain: &str, text: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stable_hash(domain, text))
}

fn key(text: &str) -> String {
    normalize_whitespace(text)
}

fn failing(fail_on: &[String], text: &str) -> bool {
    fail_on.iter().any(|f| text.contains(f.as_str()))
}

/// Token → probability list used by the masked predictor and the seq2seq fake.
pub type Distribution = Vec<(String, f64)>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskedTable {
    /// Keyed by whitespace-normalized masked text.
    pub predictions: HashMap<String, Distribution>,
    /// Used when the masked text has no entry. When absent, a hash-seeded
    /// list of lexicon verbs is produced.
    pub fallback: Option<Distribution>,
    pub fail_on: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerbScoreTable {
    /// Sentence text → token index → p_metaphoric.
    pub by_context: HashMap<String, BTreeMap<usize, f64>>,
    /// Lowercase surface → p_metaphoric.
    pub by_surface: HashMap<String, f64>,
    pub by_lemma: HashMap<String, f64>,
    /// Score for verbs missing from every table; hash-derived when absent.
    pub default: Option<f64>,
    pub fail_on: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentenceScoreTable {
    pub by_text: HashMap<String, f64>,
    /// Verb surface or lemma → score; a sentence scores the max over its verbs.
    pub metaphoric_verbs: HashMap<String, f64>,
    /// Score of a verb missing from `metaphoric_verbs`.
    pub unlisted_verb: f64,
    /// Score of a sentence without verbs.
    pub no_verb: f64,
    pub fail_on: Vec<String>,
}

impl Default for SentenceScoreTable {
    fn default() -> Self {
        SentenceScoreTable {
            by_text: HashMap::new(),
            metaphoric_verbs: HashMap::new(),
            unlisted_verb: 0.1,
            no_verb: 0.0,
            fail_on: Vec::new(),
        }
    }
}

const DEFAULT_SYMBOLS: &[&str] = &[
    "love", "loss", "despair", "sorrow", "loneliness", "peace", "happiness", "joy", "hope", "fear",
    "anger", "death", "life", "freedom", "power", "beauty", "faith", "pride", "shame", "grief",
    "longing", "change", "strength", "time",
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolTable {
    pub by_text: HashMap<String, Vec<String>>,
    /// The first verb (token order) whose lemma is listed decides the beams.
    pub by_lemma: HashMap<String, Vec<String>>,
    /// Pool for hash-derived beams; defaults to a built-in concept list.
    pub vocabulary: Vec<String>,
    pub fail_on: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderTable {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
    pub token_vectors: HashMap<String, Vec<f64>>,
}

impl Default for EmbedderTable {
    fn default() -> Self {
        EmbedderTable {
            dim: 64,
            vectors: HashMap::new(),
            token_vectors: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seq2SeqTable {
    /// Source token (lowercase surface, then verb lemma) → next-token distribution.
    pub substitutions: HashMap<String, Distribution>,
    /// Source text → token index → distribution; overrides `substitutions`.
    pub by_source: HashMap<String, BTreeMap<usize, Distribution>>,
    pub fail_on: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fixture {
    pub masked: MaskedTable,
    pub verb_scores: VerbScoreTable,
    pub sentence_scores: SentenceScoreTable,
    pub symbols: SymbolTable,
    pub embedder: EmbedderTable,
    pub seq2seq: Seq2SeqTable,
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Fixture = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Fixture::from_json(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let check_dist = |what: &str, d: &Distribution| -> Result<()> {
            let mut total = 0.0;
            for (tok, p) in d {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidConfig(format!("{what}: probability {p} for `{tok}`")));
                }
                total += p;
            }
            if total > 1.0 + 1e-9 {
                return Err(Error::InvalidConfig(format!("{what}: probabilities sum to {total}")));
            }
            Ok(())
        };
        for (k, d) in &self.masked.predictions {
            check_dist(k, d)?;
        }
        for (k, d) in &self.seq2seq.substitutions {
            check_dist(k, d)?;
        }
        for (k, m) in &self.seq2seq.by_source {
            for d in m.values() {
                check_dist(k, d)?;
            }
        }
        let probs = self
            .verb_scores
            .by_surface
            .values()
            .chain(self.verb_scores.by_lemma.values())
            .chain(self.verb_scores.by_context.values().flat_map(|m| m.values()))
            .chain(self.verb_scores.default.iter())
            .chain(self.sentence_scores.by_text.values())
            .chain(self.sentence_scores.metaphoric_verbs.values());
        for p in probs {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidConfig(format!("score {p} outside [0, 1]")));
            }
        }
        if self.embedder.dim == 0 {
            return Err(Error::InvalidConfig("embedder dimension must be positive".into()));
        }
        Ok(())
    }
}

pub struct FakeMaskedPredictor {
    fixture: Arc<Fixture>,
}

impl FakeMaskedPredictor {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeMaskedPredictor { fixture }
    }

    fn generated(text: &str) -> Distribution {
        let mut rng = rng_for("masked", text);
        let lemmas = LEXICON.lemmas();
        let mut out: Distribution = Vec::new();
        while out.len() < 30 {
            let lemma = lemmas[rng.random_range(0..lemmas.len())];
            let Some(past) = LEXICON.past_of(lemma) else { continue };
            if out.iter().any(|(s, _)| *s == past) {
                continue;
            }
            out.push((past, 0.0));
        }
        let weights: Vec<f64> = (0..out.len()).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let total: f64 = weights.iter().sum();
        for ((_, p), w) in out.iter_mut().zip(weights) {
            *p = 0.8 * w / total;
        }
        out
    }
}

impl Adapter for FakeMaskedPredictor {}

impl MaskedPredictor for FakeMaskedPredictor {
    fn predict_masked(&self, text: &str, n: usize) -> Result<Vec<MaskedPrediction>> {
        check_masked_request(text, n)?;
        let table = &self.fixture.masked;
        if failing(&table.fail_on, text) {
            return Err(Error::adapter("masked_predictor", "fixture-injected failure"));
        }
        let k = key(text);
        let dist = match (table.predictions.get(&k), &table.fallback) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d.clone(),
            (None, None) => Self::generated(&k),
        };
        let preds = dist
            .into_iter()
            .map(|(surface, prob)| MaskedPrediction { surface, prob })
            .collect();
        Ok(finalize_predictions(preds, n))
    }
}

pub struct FakeVerbScorer {
    fixture: Arc<Fixture>,
}

impl FakeVerbScorer {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeVerbScorer { fixture }
    }
}

impl Adapter for FakeVerbScorer {}

impl VerbScorer for FakeVerbScorer {
    fn score_verb(&self, sentence: &Sentence, verb: &VerbOccurrence) -> Result<MetaphoricityScore> {
        verb.check_in(sentence)?;
        let t = &self.fixture.verb_scores;
        if failing(&t.fail_on, &sentence.text) {
            return Err(Error::adapter("verb_scorer", "fixture-injected failure"));
        }
        let surface = verb.surface.to_lowercase();
        let p = t
            .by_context
            .get(&key(&sentence.text))
            .and_then(|m| m.get(&verb.token_index))
            .or_else(|| t.by_surface.get(&surface))
            .or_else(|| t.by_lemma.get(&verb.lemma))
            .copied()
            .or(t.default)
            .unwrap_or_else(|| rng_for("verb", &surface).random::<f64>());
        MetaphoricityScore::from_metaphoric(p)
    }
}

pub struct FakeSentenceScorer {
    fixture: Arc<Fixture>,
    tagger: RuleTagger,
}

impl FakeSentenceScorer {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeSentenceScorer {
            fixture,
            tagger: RuleTagger,
        }
    }
}

impl Adapter for FakeSentenceScorer {}

impl SentenceScorer for FakeSentenceScorer {
    fn score_sentence(&self, text: &str) -> Result<f64> {
        check_text(text)?;
        let t = &self.fixture.sentence_scores;
        if failing(&t.fail_on, text) {
            return Err(Error::adapter("sentence_scorer", "fixture-injected failure"));
        }
        if let Some(p) = t.by_text.get(&key(text)) {
            return Ok(*p);
        }
        let tokens = tokenize(text);
        let tags = self.tagger.tag(&tokens);
        let scores: Vec<f64> = tokens
            .iter()
            .zip(&tags)
            .filter_map(|(tok, lemma)| {
                let lemma = lemma.as_ref()?;
                let surface = tok.text.to_lowercase();
                Some(
                    t.metaphoric_verbs
                        .get(&surface)
                        .or_else(|| t.metaphoric_verbs.get(lemma))
                        .copied()
                        .unwrap_or(t.unlisted_verb),
                )
            })
            .collect();
        Ok(scores.into_iter().reduce(f64::max).unwrap_or(t.no_verb))
    }
}

pub struct FakeSymbolizer {
    fixture: Arc<Fixture>,
    tagger: RuleTagger,
}

impl FakeSymbolizer {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeSymbolizer {
            fixture,
            tagger: RuleTagger,
        }
    }
}

impl Adapter for FakeSymbolizer {}

impl Symbolizer for FakeSymbolizer {
    fn symbols_of(&self, text: &str) -> Result<SymbolBeamSet> {
        check_text(text)?;
        let t = &self.fixture.symbols;
        if failing(&t.fail_on, text) {
            return Err(Error::adapter("symbolizer", "fixture-injected failure"));
        }
        let to_set = |beams: &[String]| {
            SymbolBeamSet::new(beams).map_err(|e| Error::adapter("symbolizer", e.to_string()))
        };
        if let Some(beams) = t.by_text.get(&key(text)) {
            return to_set(beams);
        }
        let tokens = tokenize(text);
        let tags = self.tagger.tag(&tokens);
        if let Some(beams) = tags.iter().flatten().find_map(|lemma| t.by_lemma.get(lemma)) {
            return to_set(beams);
        }
        // Hash of the verb-free context: swapping a verb keeps the beams.
        let context: Vec<String> = tokens
            .iter()
            .zip(&tags)
            .filter(|(_, lemma)| lemma.is_none())
            .map(|(tok, _)| tok.text.to_lowercase())
            .collect();
        let pool: Vec<&str> = if t.vocabulary.is_empty() {
            DEFAULT_SYMBOLS.to_vec()
        } else {
            t.vocabulary.iter().map(String::as_str).collect()
        };
        if pool.len() < 5 {
            return Err(Error::adapter("symbolizer", "symbol vocabulary has fewer than 5 entries"));
        }
        let mut rng = rng_for("symbols", &context.join(" "));
        let mut picked: Vec<&str> = Vec::with_capacity(5);
        while picked.len() < 5 {
            let s = pool[rng.random_range(0..pool.len())];
            if !picked.contains(&s) {
                picked.push(s);
            }
        }
        to_set(&picked.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }
}

pub struct FakeEmbedder {
    fixture: Arc<Fixture>,
}

impl FakeEmbedder {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeEmbedder { fixture }
    }

    fn hashed(&self, domain: &str, text: &str) -> Vec<f64> {
        let mut rng = rng_for(domain, text);
        let v: Vec<f64> = (0..self.fixture.embedder.dim)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        normalize_unit(v)
    }

    fn fixed(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.fixture.embedder.dim || v.iter().all(|x| *x == 0.0) {
            return Err(Error::adapter(
                "embedder",
                format!("fixture vector must be non-zero with dimension {}", self.fixture.embedder.dim),
            ));
        }
        Ok(normalize_unit(v.to_vec()))
    }
}

impl Adapter for FakeEmbedder {}

impl Embedder for FakeEmbedder {
    fn dim(&self) -> usize {
        self.fixture.embedder.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        check_text(text)?;
        let k = key(text);
        if let Some(v) = self.fixture.embedder.vectors.get(&k) {
            return self.fixed(v);
        }
        // Mean of the token vectors, so sentences sharing words are close.
        let mut sum = vec![0.0; self.dim()];
        for (_, v) in self.embed_tokens(text)? {
            sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
        }
        if sum.iter().all(|x| *x == 0.0) {
            return Ok(self.hashed("sentence", &k));
        }
        Ok(normalize_unit(sum))
    }

    fn embed_tokens(&self, text: &str) -> Result<Vec<(String, Vec<f64>)>> {
        check_text(text)?;
        tokenize(text)
            .into_iter()
            .map(|tok| {
                let k = tok.text.to_lowercase();
                let v = match self.fixture.embedder.token_vectors.get(&k) {
                    Some(v) => self.fixed(v)?,
                    None => self.hashed("token", &k),
                };
                Ok((tok.text, v))
            })
            .collect()
    }
}

/// Table-driven sequence model that copies the source token by token, except
/// at positions whose token has a substitution distribution.
pub struct FakeSeq2Seq {
    fixture: Arc<Fixture>,
    tagger: RuleTagger,
}

impl FakeSeq2Seq {
    pub fn new(fixture: Arc<Fixture>) -> Self {
        FakeSeq2Seq {
            fixture,
            tagger: RuleTagger,
        }
    }

    /// Next-token distribution for every source position, sorted by
    /// probability descending then token. Copy steps have probability 1.
    pub fn step_distributions(&self, source: &str) -> Vec<Distribution> {
        let t = &self.fixture.seq2seq;
        let tokens = tokenize(source);
        let tags = self.tagger.tag(&tokens);
        let overrides = t.by_source.get(&key(source));
        tokens
            .iter()
            .zip(&tags)
            .enumerate()
            .map(|(i, (tok, lemma))| {
                let lower = tok.text.to_lowercase();
                let table_key = if tok.text == MASK_TOKEN { tok.text.clone() } else { lower };
                let dist = overrides
                    .and_then(|m| m.get(&i))
                    .or_else(|| t.substitutions.get(&table_key))
                    .or_else(|| lemma.as_ref().and_then(|l| t.substitutions.get(l)));
                let mut dist = match dist {
                    Some(d) if !d.is_empty() => d.clone(),
                    _ => vec![(tok.text.clone(), 1.0)],
                };
                dist.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                dist
            })
            .collect()
    }
}

impl Adapter for FakeSeq2Seq {}

impl Seq2Seq for FakeSeq2Seq {
    fn sample(&self, source: &str, k: usize, num_hypotheses: usize, seed: u64) -> Result<Vec<DecodedHypothesis>> {
        if k == 0 || num_hypotheses == 0 {
            return Err(Error::invalid("k and num_hypotheses must be at least 1"));
        }
        check_text(source)?;
        if failing(&self.fixture.seq2seq.fail_on, source) {
            return Err(Error::adapter("seq2seq", "fixture-injected failure"));
        }
        let steps = self.step_distributions(source);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash("seq2seq", &key(source)));
        (0..num_hypotheses)
            .map(|_| {
                let mut tokens = Vec::with_capacity(steps.len());
                let mut logprobs = Vec::with_capacity(steps.len());
                for dist in &steps {
                    let top = &dist[..k.min(dist.len())];
                    let (tok, p) = if top.len() == 1 {
                        &top[0]
                    } else {
                        let total: f64 = top.iter().map(|(_, p)| p).sum();
                        let mut u = rng.random::<f64>() * total;
                        let mut chosen = &top[top.len() - 1];
                        for entry in top {
                            if u < entry.1 {
                                chosen = entry;
                                break;
                            }
                            u -= entry.1;
                        }
                        chosen
                    };
                    tokens.push(tok.clone());
                    logprobs.push(p.ln().min(0.0));
                }
                DecodedHypothesis::new(tokens, logprobs)
            })
            .collect()
    }
}
