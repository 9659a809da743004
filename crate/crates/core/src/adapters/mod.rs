//! Contracts for the external neural models and the registry that wires them.
//!
//! Every slot has a deterministic fixture-driven fake ([`fake`]) and an HTTP
//! client for a remote model server ([`remote`]). Slot backends are chosen by
//! an [`AdapterConfig`].

mod config;
pub mod fake;
pub mod remote;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{AdapterConfig, BackendSpec};

use crate::error::{Error, Result};
use crate::text::{tokenize, PosTagger, RuleTagger, MASK_TOKEN};
use crate::types::{DecodedHypothesis, MetaphoricityScore, Sentence, SymbolBeamSet, VerbOccurrence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPrediction {
    pub surface: String,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    MaskedPredictor,
    VerbScorer,
    SentenceScorer,
    Symbolizer,
    Embedder,
    Seq2Seq,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::MaskedPredictor,
        Slot::VerbScorer,
        Slot::SentenceScorer,
        Slot::Symbolizer,
        Slot::Embedder,
        Slot::Seq2Seq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::MaskedPredictor => "masked_predictor",
            Slot::VerbScorer => "verb_scorer",
            Slot::SentenceScorer => "sentence_scorer",
            Slot::Symbolizer => "symbolizer",
            Slot::Embedder => "embedder",
            Slot::Seq2Seq => "seq2seq",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Behaviour common to all adapter slots.
pub trait Adapter: Send + Sync {
    /// Concurrent calls the backend tolerates. Fakes are unrestricted.
    fn max_concurrency(&self) -> usize {
        usize::MAX
    }

    /// Reachability probe used by health checks.
    fn ping(&self) -> Result<()> {
        Ok(())
    }
}

pub trait MaskedPredictor: Adapter {
    /// At most `n` fills for the single mask slot, sorted by probability descending.
    fn predict_masked(&self, text_with_one_mask: &str, n: usize) -> Result<Vec<MaskedPrediction>>;

    fn predict_masked_batch(&self, texts: &[&str], n: usize) -> Vec<Result<Vec<MaskedPrediction>>> {
        texts.iter().map(|t| self.predict_masked(t, n)).collect()
    }
}

pub trait VerbScorer: Adapter {
    fn score_verb(&self, sentence: &Sentence, verb: &VerbOccurrence) -> Result<MetaphoricityScore>;

    fn score_verbs_batch(&self, items: &[(&Sentence, &VerbOccurrence)]) -> Vec<Result<MetaphoricityScore>> {
        items.iter().map(|(s, v)| self.score_verb(s, v)).collect()
    }
}

pub trait SentenceScorer: Adapter {
    /// Probability that `text` contains a metaphorical verb.
    fn score_sentence(&self, text: &str) -> Result<f64>;

    fn score_sentences(&self, texts: &[&str]) -> Vec<Result<f64>> {
        texts.iter().map(|t| self.score_sentence(t)).collect()
    }
}

pub trait Symbolizer: Adapter {
    fn symbols_of(&self, text: &str) -> Result<SymbolBeamSet>;

    fn symbols_of_batch(&self, texts: &[&str]) -> Vec<Result<SymbolBeamSet>> {
        texts.iter().map(|t| self.symbols_of(t)).collect()
    }
}

pub trait Embedder: Adapter {
    fn dim(&self) -> usize;

    /// Unit-norm sentence embedding.
    fn embed(&self, text: &str) -> Result<Vec<f64>>;

    /// Unit-norm contextual token embeddings, one per token.
    fn embed_tokens(&self, text: &str) -> Result<Vec<(String, Vec<f64>)>>;

    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<Vec<f64>>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub trait Seq2Seq: Adapter {
    /// Top-k sampled hypotheses; `disc_score` and `combined` are left unset.
    fn sample(&self, source: &str, k: usize, num_hypotheses: usize, seed: u64) -> Result<Vec<DecodedHypothesis>>;
}

/// Checks the single-mask precondition and `n >= 1`.
pub fn check_masked_request(text: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("requested zero masked predictions"));
    }
    let masks = tokenize(text).iter().filter(|t| t.text == MASK_TOKEN).count();
    if masks != 1 {
        return Err(Error::invalid(format!(
            "expected exactly one {MASK_TOKEN} slot, found {masks}"
        )));
    }
    Ok(())
}

/// Sorts by probability descending (stable) and keeps the first `n`.
pub fn finalize_predictions(mut preds: Vec<MaskedPrediction>, n: usize) -> Vec<MaskedPrediction> {
    preds.sort_by(|a, b| b.prob.total_cmp(&a.prob));
    preds.truncate(n);
    preds
}

pub(crate) fn check_text(text: &str) -> Result<()> {
    if text.trim().is_empty() {
        Err(Error::invalid("text is empty"))
    } else {
        Ok(())
    }
}

pub(crate) fn normalize_unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// The six model slots plus the part-of-speech tagger.
#[derive(Clone)]
pub struct AdapterRegistry {
    pub masked_predictor: Arc<dyn MaskedPredictor>,
    pub verb_scorer: Arc<dyn VerbScorer>,
    pub sentence_scorer: Arc<dyn SentenceScorer>,
    pub symbolizer: Arc<dyn Symbolizer>,
    pub embedder: Arc<dyn Embedder>,
    pub seq2seq: Arc<dyn Seq2Seq>,
    pub tagger: Arc<dyn PosTagger>,
}

impl fmt::Debug for AdapterRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdapterRegistry").finish_non_exhaustive()
    }
}

impl AdapterRegistry {
    pub fn builder() -> AdapterRegistryBuilder {
        AdapterRegistryBuilder::default()
    }

    /// Every slot backed by the same fake fixture.
    pub fn from_fixture(fixture: fake::Fixture) -> Self {
        let f = Arc::new(fixture);
        AdapterRegistry {
            masked_predictor: Arc::new(fake::FakeMaskedPredictor::new(f.clone())),
            verb_scorer: Arc::new(fake::FakeVerbScorer::new(f.clone())),
            sentence_scorer: Arc::new(fake::FakeSentenceScorer::new(f.clone())),
            symbolizer: Arc::new(fake::FakeSymbolizer::new(f.clone())),
            embedder: Arc::new(fake::FakeEmbedder::new(f.clone())),
            seq2seq: Arc::new(fake::FakeSeq2Seq::new(f)),
            tagger: Arc::new(RuleTagger),
        }
    }

    pub fn from_config(config: &AdapterConfig) -> Result<Self> {
        config.build_registry()
    }

    fn slot_adapter(&self, slot: Slot) -> &dyn Adapter {
        match slot {
            Slot::MaskedPredictor => &*self.masked_predictor,
            Slot::VerbScorer => &*self.verb_scorer,
            Slot::SentenceScorer => &*self.sentence_scorer,
            Slot::Symbolizer => &*self.symbolizer,
            Slot::Embedder => &*self.embedder,
            Slot::Seq2Seq => &*self.seq2seq,
        }
    }

    /// Smallest declared concurrency limit over all slots.
    pub fn max_concurrency(&self) -> usize {
        Slot::ALL
            .iter()
            .map(|s| self.slot_adapter(*s).max_concurrency())
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Runs `f` on a thread pool no wider than the registry's concurrency
    /// limit. Unrestricted registries use the global pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let limit = self.max_concurrency();
        if limit >= rayon::current_num_threads() {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(limit.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(pool.install(f))
    }

    /// Probes every slot, in slot order.
    pub fn health(&self) -> Vec<(Slot, Result<()>)> {
        Slot::ALL
            .iter()
            .map(|s| (*s, self.slot_adapter(*s).ping()))
            .collect()
    }
}

#[derive(Default)]
pub struct AdapterRegistryBuilder {
    masked_predictor: Option<Arc<dyn MaskedPredictor>>,
    verb_scorer: Option<Arc<dyn VerbScorer>>,
    sentence_scorer: Option<Arc<dyn SentenceScorer>>,
    symbolizer: Option<Arc<dyn Symbolizer>>,
    embedder: Option<Arc<dyn Embedder>>,
    seq2seq: Option<Arc<dyn Seq2Seq>>,
    tagger: Option<Arc<dyn PosTagger>>,
}

impl AdapterRegistryBuilder {
    pub fn masked_predictor(mut self, a: Arc<dyn MaskedPredictor>) -> Self {
        self.masked_predictor = Some(a);
        self
    }
    pub fn verb_scorer(mut self, a: Arc<dyn VerbScorer>) -> Self {
        self.verb_scorer = Some(a);
        self
    }
    pub fn sentence_scorer(mut self, a: Arc<dyn SentenceScorer>) -> Self {
        self.sentence_scorer = Some(a);
        self
    }
    pub fn symbolizer(mut self, a: Arc<dyn Symbolizer>) -> Self {
        self.symbolizer = Some(a);
        self
    }
    pub fn embedder(mut self, a: Arc<dyn Embedder>) -> Self {
        self.embedder = Some(a);
        self
    }
    pub fn seq2seq(mut self, a: Arc<dyn Seq2Seq>) -> Self {
        self.seq2seq = Some(a);
        self
    }
    pub fn tagger(mut self, t: Arc<dyn PosTagger>) -> Self {
        self.tagger = Some(t);
        self
    }

    /// Fails naming the first empty slot. The tagger defaults to [`RuleTagger`].
    pub fn build(self) -> Result<AdapterRegistry> {
        fn need<T: ?Sized>(v: Option<Arc<T>>, slot: Slot) -> Result<Arc<T>> {
            v.ok_or_else(|| Error::InvalidConfig(format!("adapter slot `{slot}` is not populated")))
        }
        Ok(AdapterRegistry {
            masked_predictor: need(self.masked_predictor, Slot::MaskedPredictor)?,
            verb_scorer: need(self.verb_scorer, Slot::VerbScorer)?,
            sentence_scorer: need(self.sentence_scorer, Slot::SentenceScorer)?,
            symbolizer: need(self.symbolizer, Slot::Symbolizer)?,
            embedder: need(self.embedder, Slot::Embedder)?,
            seq2seq: need(self.seq2seq, Slot::Seq2Seq)?,
            tagger: self.tagger.unwrap_or_else(|| Arc::new(RuleTagger)),
        })
    }
}
