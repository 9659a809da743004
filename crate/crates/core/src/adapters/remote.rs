//! JSON-over-HTTP client for remote model servers.
//!
//! One endpoint per adapter operation, relative to the slot's base URI:
//!
//! | operation        | method + path          | request                               | response                              |
//! |------------------|------------------------|---------------------------------------|---------------------------------------|
//! | predict_masked   | `POST /predict_masked` | `{text, n}`                           | `{predictions: [{surface, prob}]}`    |
//! | score_verb       | `POST /score_verb`     | `{text, token_index, surface, lemma}` | `{p_metaphoric}`                      |
//! | score_sentence   | `POST /score_sentence` | `{text}`                              | `{score}`                             |
//! | symbols_of       | `POST /symbols_of`     | `{text}`                              | `{beams: [string]}`                   |
//! | embed            | `POST /embed`          | `{text}`                              | `{vector: [f64]}`                     |
//! | embed_tokens     | `POST /embed_tokens`   | `{text}`                              | `{tokens: [{token, vector}]}`         |
//! | seq2seq_sample   | `POST /seq2seq_sample` | `{source, k, num_hypotheses, seed}`   | `{hypotheses: [{tokens, token_logprobs}]}` |
//! | health           | `GET /health`          |                                       | any 2xx                               |

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    check_masked_request, check_text, finalize_predictions, normalize_unit, Adapter, Embedder,
    MaskedPrediction, MaskedPredictor, Seq2Seq, SentenceScorer, Slot, Symbolizer, VerbScorer,
};
use crate::error::{Error, Result};
use crate::types::{DecodedHypothesis, MetaphoricityScore, Sentence, SymbolBeamSet, VerbOccurrence};

pub struct RemoteAdapter {
    slot: Slot,
    base: String,
    agent: ureq::Agent,
    max_concurrency: usize,
}

impl RemoteAdapter {
    pub fn new(slot: Slot, base_uri: &str, max_concurrency: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteAdapter {
            slot,
            base: base_uri.trim_end_matches('/').to_string(),
            agent,
            max_concurrency: max_concurrency.max(1),
        }
    }

    pub fn base_uri(&self) -> &str {
        &self.base
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::adapter(self.slot.name(), format!("{}: {msg}", self.base))
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: serde_json::Value) -> Result<T> {
        let url = format!("{}/{path}", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| self.err(e))?;
        resp.body_mut().read_json::<T>().map_err(|e| self.err(e))
    }
}

impl Adapter for RemoteAdapter {
    fn max_concurrency(&self) -> usize {
        self.max_concurrency
    }

    fn ping(&self) -> Result<()> {
        self.agent
            .get(format!("{}/health", self.base))
            .call()
            .map(|_| ())
            .map_err(|e| self.err(e))
    }
}

#[derive(Deserialize)]
struct PredictionsResponse {
    predictions: Vec<MaskedPrediction>,
}

impl MaskedPredictor for RemoteAdapter {
    fn predict_masked(&self, text: &str, n: usize) -> Result<Vec<MaskedPrediction>> {
        check_masked_request(text, n)?;
        let r: PredictionsResponse = self.post("predict_masked", json!({"text": text, "n": n}))?;
        if let Some(bad) = r.predictions.iter().find(|p| !(0.0..=1.0).contains(&p.prob)) {
            return Err(self.err(format!("probability {} out of range", bad.prob)));
        }
        Ok(finalize_predictions(r.predictions, n))
    }
}

#[derive(Deserialize)]
struct VerbScoreResponse {
    p_metaphoric: f64,
}

impl VerbScorer for RemoteAdapter {
    fn score_verb(&self, sentence: &Sentence, verb: &VerbOccurrence) -> Result<MetaphoricityScore> {
        verb.check_in(sentence)?;
        let r: VerbScoreResponse = self.post(
            "score_verb",
            json!({
                "text": sentence.text,
                "token_index": verb.token_index,
                "surface": verb.surface,
                "lemma": verb.lemma,
            }),
        )?;
        MetaphoricityScore::from_metaphoric(r.p_metaphoric).map_err(|e| self.err(e))
    }
}

#[derive(Deserialize)]
struct SentenceScoreResponse {
    score: f64,
}

impl SentenceScorer for RemoteAdapter {
    fn score_sentence(&self, text: &str) -> Result<f64> {
        check_text(text)?;
        let r: SentenceScoreResponse = self.post("score_sentence", json!({"text": text}))?;
        if !(0.0..=1.0).contains(&r.score) {
            return Err(self.err(format!("score {} out of range", r.score)));
        }
        Ok(r.score)
    }
}

#[derive(Deserialize)]
struct SymbolsResponse {
    beams: Vec<String>,
}

impl Symbolizer for RemoteAdapter {
    fn symbols_of(&self, text: &str) -> Result<SymbolBeamSet> {
        check_text(text)?;
        let r: SymbolsResponse = self.post("symbols_of", json!({"text": text}))?;
        SymbolBeamSet::new(r.beams).map_err(|e| self.err(e))
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct TokenVector {
    token: String,
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct EmbedTokensResponse {
    tokens: Vec<TokenVector>,
}

impl Embedder for RemoteAdapter {
    /// Unknown until the first call; remote embedders report their own size.
    fn dim(&self) -> usize {
        0
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        check_text(text)?;
        let r: EmbedResponse = self.post("embed", json!({"text": text}))?;
        if r.vector.is_empty() {
            return Err(self.err("empty embedding"));
        }
        Ok(normalize_unit(r.vector))
    }

    fn embed_tokens(&self, text: &str) -> Result<Vec<(String, Vec<f64>)>> {
        check_text(text)?;
        let r: EmbedTokensResponse = self.post("embed_tokens", json!({"text": text}))?;
        Ok(r.tokens
            .into_iter()
            .map(|t| (t.token, normalize_unit(t.vector)))
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct WireHypothesis {
    tokens: Vec<String>,
    token_logprobs: Vec<f64>,
}

#[derive(Deserialize)]
struct SampleResponse {
    hypotheses: Vec<WireHypothesis>,
}

impl Seq2Seq for RemoteAdapter {
    fn sample(&self, source: &str, k: usize, num_hypotheses: usize, seed: u64) -> Result<Vec<DecodedHypothesis>> {
        if k == 0 || num_hypotheses == 0 {
            return Err(Error::invalid("k and num_hypotheses must be at least 1"));
        }
        check_text(source)?;
        let r: SampleResponse = self.post(
            "seq2seq_sample",
            json!({"source": source, "k": k, "num_hypotheses": num_hypotheses, "seed": seed}),
        )?;
        r.hypotheses
            .into_iter()
            .map(|h| DecodedHypothesis::new(h.tokens, h.token_logprobs).map_err(|e| self.err(e)))
            .collect()
    }
}
