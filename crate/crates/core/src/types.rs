//! Domain values shared by every stage of the system.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_whitespace, tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceSource {
    PoetryCorpus,
    User,
    TestSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub source: SentenceSource,
}

impl Sentence {
    /// Rejects text that is empty after whitespace normalization. The text
    /// itself is stored verbatim.
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: SentenceSource) -> Result<Self> {
        let text = text.into();
        if normalize_whitespace(&text).is_empty() {
            return Err(Error::invalid("sentence text is empty"));
        }
        Ok(Sentence {
            id: id.into(),
            text,
            source,
        })
    }

    pub fn user(text: impl Into<String>) -> Result<Self> {
        Sentence::new("user", text, SentenceSource::User)
    }

    pub fn tokens(&self) -> Vec<Token> {
        tokenize(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VerbOccurrence {
    pub sentence_id: String,
    pub token_index: usize,
    pub surface: String,
    pub lemma: String,
}

impl VerbOccurrence {
    /// Checks that `token_index` addresses a token of `sentence` equal to `surface`.
    pub fn check_in(&self, sentence: &Sentence) -> Result<()> {
        let tokens = sentence.tokens();
        match tokens.get(self.token_index) {
            Some(t) if t.text == self.surface => Ok(()),
            Some(t) => Err(Error::invalid(format!(
                "token {} is `{}`, not `{}`",
                self.token_index, t.text, self.surface
            ))),
            None => Err(Error::invalid(format!(
                "verb index {} out of range for {} tokens",
                self.token_index,
                tokens.len()
            ))),
        }
    }
}

impl fmt::Display for VerbOccurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.surface, self.token_index)
    }
}

/// Two-class softmax output for a verb (or sentence).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaphoricityScore {
    p_metaphoric: f64,
    p_literal: f64,
}

impl MetaphoricityScore {
    pub fn from_metaphoric(p_metaphoric: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_metaphoric) {
            return Err(Error::invalid(format!(
                "metaphoric probability {p_metaphoric} outside [0, 1]"
            )));
        }
        Ok(MetaphoricityScore {
            p_metaphoric,
            p_literal: 1.0 - p_metaphoric,
        })
    }

    pub fn p_metaphoric(&self) -> f64 {
        self.p_metaphoric
    }

    pub fn p_literal(&self) -> f64 {
        self.p_literal
    }
}

/// Case-folds, trims and collapses inner whitespace.
pub fn normalize_symbol(raw: &str) -> String {
    normalize_whitespace(raw).to_lowercase()
}

pub const SYMBOL_BEAMS: usize = 5;

/// The five commonsense symbol beams produced for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SymbolBeamSet {
    beams: Vec<String>,
}

impl SymbolBeamSet {
    /// Normalizes each beam. Exactly five distinct non-empty beams are required.
    pub fn new<I, S>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let beams: Vec<String> = raw.into_iter().map(|s| normalize_symbol(s.as_ref())).collect();
        if beams.len() != SYMBOL_BEAMS {
            return Err(Error::invalid(format!(
                "expected {SYMBOL_BEAMS} symbol beams, got {}",
                beams.len()
            )));
        }
        if beams.iter().any(String::is_empty) {
            return Err(Error::invalid("empty symbol beam"));
        }
        if beams.iter().collect::<BTreeSet<_>>().len() != SYMBOL_BEAMS {
            return Err(Error::invalid("duplicate symbol beams after normalization"));
        }
        Ok(SymbolBeamSet { beams })
    }

    pub fn beams(&self) -> &[String] {
        &self.beams
    }

    /// Size of the set intersection; beam order is ignored.
    pub fn overlap(&self, other: &SymbolBeamSet) -> usize {
        let mine: BTreeSet<&str> = self.beams.iter().map(String::as_str).collect();
        other.beams.iter().filter(|b| mine.contains(b.as_str())).count()
    }
}

impl<'de> Deserialize<'de> for SymbolBeamSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        SymbolBeamSet::new(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateVerb {
    pub surface: String,
    pub lm_prob: f64,
    pub score: MetaphoricityScore,
    pub symbol_overlap: Option<usize>,
}

/// One training pair. Serializes to the canonical JSONL record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralMetaphorPair {
    #[serde(rename = "literal")]
    pub literal_text: String,
    #[serde(rename = "metaphor")]
    pub metaphor_text: String,
    #[serde(rename = "verb_index")]
    pub verb_token_index: usize,
    pub literal_verb: String,
    pub metaphor_verb: String,
    pub symbols: SymbolBeamSet,
    #[serde(rename = "p_literal")]
    pub p_literal_of_replacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedHypothesis {
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<f64>,
    #[serde(default)]
    pub disc_score: Option<f64>,
    #[serde(default)]
    pub combined: Option<f64>,
}

impl DecodedHypothesis {
    pub fn new(tokens: Vec<String>, token_logprobs: Vec<f64>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != token_logprobs.len() {
            return Err(Error::invalid(format!(
                "hypothesis has {} tokens and {} log-probabilities",
                tokens.len(),
                token_logprobs.len()
            )));
        }
        if let Some(lp) = token_logprobs.iter().find(|lp| !(**lp <= 0.0)) {
            return Err(Error::invalid(format!("token log-probability {lp} is positive")));
        }
        Ok(DecodedHypothesis {
            tokens,
            token_logprobs,
            disc_score: None,
            combined: None,
        })
    }
}
