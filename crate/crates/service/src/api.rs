//! Request and response bodies of the JSON API.

use std::collections::BTreeMap;

use metaphor_core::enhancer::EnhancedQuatrain;
use metaphor_core::types::LiteralMetaphorPair;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestRequest {
    pub text: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub num_hypotheses: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub verb_before: Option<String>,
    pub verb_after: Option<String>,
    pub nll: f64,
    pub disc: f64,
    pub combined: f64,
    /// Semantic similarity to the input, 0 to 100.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub input: String,
    pub seed: u64,
    pub lambda: f64,
    /// Ascending by combined score.
    pub candidates: Vec<Candidate>,
    pub chosen_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhanceRequest {
    /// Poem text, one line per line; blank lines separate stanzas.
    pub poem: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub num_hypotheses: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhanceResponse {
    pub seed: u64,
    pub quatrains: Vec<EnhancedQuatrain>,
    /// Trailing lines that did not fill a quatrain.
    pub remainder: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiteralizeRequest {
    pub text: String,
    /// Token index of the verb to replace; defaults to the most metaphoric verb.
    #[serde(default)]
    pub verb_index: Option<usize>,
    #[serde(default)]
    pub candidates: Option<usize>,
    #[serde(default)]
    pub overlap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralizeResponse {
    pub pair: Option<LiteralMetaphorPair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// One or more references per item.
    pub references: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotHealth {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    /// "ok" or "unavailable".
    pub status: String,
    pub adapters: BTreeMap<String, SlotHealth>,
    pub failing: Vec<String>,
}
