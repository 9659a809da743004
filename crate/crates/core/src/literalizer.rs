//! Metaphor → literal rewriting under a symbolic-meaning constraint.
//!
//! The metaphoric verb is masked, the masked language model proposes
//! replacement verbs, and a replacement survives only if the rewritten
//! sentence evokes the same commonsense symbols as the input. Among the
//! survivors the most literal one wins.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::adapters::{AdapterRegistry, MaskedPrediction};
use crate::error::{Error, Result};
use crate::text::{replace_token, tokenize, verb_lemma_at, MASK_TOKEN};
use crate::types::{
    CandidateVerb, LiteralMetaphorPair, Sentence, SymbolBeamSet, VerbOccurrence, SYMBOL_BEAMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralizeConfig {
    pub n_candidates: usize,
    pub required_overlap: usize,
    pub exclude_original_verb: bool,
}

impl Default for LiteralizeConfig {
    fn default() -> Self {
        LiteralizeConfig {
            n_candidates: 200,
            required_overlap: SYMBOL_BEAMS,
            exclude_original_verb: true,
        }
    }
}

impl LiteralizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::InvalidConfig("n_candidates must be at least 1".into()));
        }
        if !(1..=SYMBOL_BEAMS).contains(&self.required_overlap) {
            return Err(Error::InvalidConfig(format!(
                "required_overlap must be in 1..={SYMBOL_BEAMS}, got {}",
                self.required_overlap
            )));
        }
        Ok(())
    }
}

/// The sentence text with the verb token replaced by the mask slot.
pub fn mask_verb(sentence: &Sentence, verb: &VerbOccurrence) -> Result<String> {
    verb.check_in(sentence)?;
    replace_token(&sentence.text, verb.token_index, MASK_TOKEN)
}

/// Fills the single mask slot of `masked` with `surface`.
pub fn unmask(masked: &str, surface: &str) -> Result<String> {
    let index = mask_index(masked)?;
    replace_token(masked, index, surface)
}

fn mask_index(masked: &str) -> Result<usize> {
    let mut found = tokenize(masked)
        .into_iter()
        .enumerate()
        .filter(|(_, t)| t.text == MASK_TOKEN)
        .map(|(i, _)| i);
    match (found.next(), found.next()) {
        (Some(i), None) => Ok(i),
        _ => Err(Error::invalid(format!("expected exactly one {MASK_TOKEN} slot"))),
    }
}

/// A candidate substituted into the masked slot, ready for scoring.
struct Substitution {
    sentence: Sentence,
    verb: VerbOccurrence,
}

/// Substitutes `candidate` into `masked`; `None` unless the filled slot is
/// still a single token tagged as a verb.
fn substitute(masked: &str, slot: usize, id: &str, candidate: &MaskedPrediction, registry: &AdapterRegistry) -> Option<Substitution> {
    let text = replace_token(masked, slot, &candidate.surface).ok()?;
    let tokens = tokenize(&text);
    if tokens.len() != tokenize(masked).len() || tokens[slot].text != candidate.surface {
        return None;
    }
    let lemma = verb_lemma_at(&text, slot, &*registry.tagger)?;
    let sentence = Sentence::new(id, text, crate::types::SentenceSource::User).ok()?;
    Some(Substitution {
        verb: VerbOccurrence {
            sentence_id: sentence.id.clone(),
            token_index: slot,
            surface: candidate.surface.clone(),
            lemma,
        },
        sentence,
    })
}

/// Scores each candidate in context and sorts most-literal first (ascending
/// p_metaphoric, stable). Candidates that are not verbs in context or whose
/// scoring fails are dropped.
pub fn rank_by_literalness(
    masked: &str,
    candidates: &[MaskedPrediction],
    registry: &AdapterRegistry,
) -> Result<Vec<CandidateVerb>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to rank"));
    }
    let slot = mask_index(masked)?;
    let mut ranked: Vec<CandidateVerb> = candidates
        .iter()
        .filter_map(|c| {
            let sub = substitute(masked, slot, "candidate", c, registry)?;
            match registry.verb_scorer.score_verb(&sub.sentence, &sub.verb) {
                Ok(score) => Some(CandidateVerb {
                    surface: c.surface.clone(),
                    lm_prob: c.prob,
                    score,
                    symbol_overlap: None,
                }),
                Err(e) => {
                    log::warn!("dropping candidate `{}`: {e}", c.surface);
                    None
                }
            }
        })
        .collect();
    ranked.sort_by(|a, b| a.score.p_metaphoric().total_cmp(&b.score.p_metaphoric()));
    Ok(ranked)
}

/// Cardinality of the normalized-set intersection.
pub fn symbol_overlap(a: &SymbolBeamSet, b: &SymbolBeamSet) -> usize {
    a.overlap(b)
}

/// Selection order among symbol-filter survivors: lowest p_metaphoric, then
/// highest language-model probability, then lexicographic surface.
pub fn literal_preference(a: &CandidateVerb, b: &CandidateVerb) -> Ordering {
    a.score
        .p_metaphoric()
        .total_cmp(&b.score.p_metaphoric())
        .then_with(|| b.lm_prob.total_cmp(&a.lm_prob))
        .then_with(|| a.surface.cmp(&b.surface))
}

/// Full literalization of one metaphoric verb. `Ok(None)` when no candidate
/// survives; adapter failures on the input sentence also yield `Ok(None)`.
pub fn literalize(
    sentence: &Sentence,
    verb: &VerbOccurrence,
    config: &LiteralizeConfig,
    registry: &AdapterRegistry,
) -> Result<Option<LiteralMetaphorPair>> {
    config.validate()?;
    let masked = mask_verb(sentence, verb)?;
    let slot = verb.token_index;

    let predictions = match registry.masked_predictor.predict_masked(&masked, config.n_candidates) {
        Ok(p) => p,
        Err(e) if e.is_adapter() => {
            log::warn!("{}: masked prediction failed: {e}", sentence.id);
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let input_symbols = match registry.symbolizer.symbols_of(&sentence.text) {
        Ok(s) => s,
        Err(e) if e.is_adapter() => {
            log::warn!("{}: input symbols unavailable: {e}", sentence.id);
            return Ok(None);
        }
        Err(e) => return Err(e),
    };

    let original_surface = verb.surface.to_lowercase();
    let mut best: Option<(CandidateVerb, Substitution)> = None;
    for prediction in &predictions {
        let Some(sub) = substitute(&masked, slot, &sentence.id, prediction, registry) else {
            continue;
        };
        if config.exclude_original_verb
            && (prediction.surface.to_lowercase() == original_surface || sub.verb.lemma == verb.lemma)
        {
            continue;
        }
        let overlap = match registry.symbolizer.symbols_of(&sub.sentence.text) {
            Ok(symbols) => symbol_overlap(&input_symbols, &symbols),
            Err(e) => {
                log::warn!("{}: dropping `{}`: {e}", sentence.id, prediction.surface);
                continue;
            }
        };
        if overlap < config.required_overlap {
            continue;
        }
        let score = match registry.verb_scorer.score_verb(&sub.sentence, &sub.verb) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("{}: dropping `{}`: {e}", sentence.id, prediction.surface);
                continue;
            }
        };
        let candidate = CandidateVerb {
            surface: prediction.surface.clone(),
            lm_prob: prediction.prob,
            score,
            symbol_overlap: Some(overlap),
        };
        let better = match &best {
            None => true,
            Some((b, _)) => literal_preference(&candidate, b) == Ordering::Less,
        };
        if better {
            best = Some((candidate, sub));
        }
    }

    Ok(best.map(|(candidate, sub)| LiteralMetaphorPair {
        literal_text: sub.sentence.text,
        metaphor_text: sentence.text.clone(),
        verb_token_index: slot,
        literal_verb: candidate.surface,
        metaphor_verb: verb.surface.clone(),
        symbols: input_symbols,
        p_literal_of_replacement: candidate.score.p_literal(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::fake::Fixture;
    use crate::text::extract_verbs;

    const SURGED: &str = "The turbulent feelings that surged through his soul .";

    fn verb_at(s: &Sentence, i: usize, reg: &AdapterRegistry) -> VerbOccurrence {
        extract_verbs(s, &*reg.tagger)
            .unwrap()
            .into_iter()
            .find(|v| v.token_index == i)
            .unwrap()
    }

    #[test]
    fn masking() {
        let reg = AdapterRegistry::from_fixture(Fixture::default());
        let s = Sentence::user(SURGED).unwrap();
        let v = verb_at(&s, 4, &reg);
        let masked = mask_verb(&s, &v).unwrap();
        assert_eq!(masked, "The turbulent feelings that [MASK] through his soul .");
        assert_eq!(unmask(&masked, &v.surface).unwrap(), s.text);

        let run = Sentence::user("Run home now").unwrap();
        let v = VerbOccurrence {
            sentence_id: "user".into(),
            token_index: 0,
            surface: "Run".into(),
            lemma: "run".into(),
        };
        assert_eq!(mask_verb(&run, &v).unwrap(), "[MASK] home now");

        let bad = VerbOccurrence { token_index: 7, ..v };
        assert!(mask_verb(&run, &bad).is_err());
    }

    #[test]
    fn overlap_examples() {
        let a = SymbolBeamSet::new(["love", "loss", "despair", "sorrow", "loneliness"]).unwrap();
        let b = SymbolBeamSet::new(["peace", "love", "happiness", "joy", "hope"]).unwrap();
        let c = SymbolBeamSet::new(["fear", "anger", "death", "life", "time"]).unwrap();
        assert_eq!(symbol_overlap(&a, &b), 1);
        assert_eq!(symbol_overlap(&a, &a), 5);
        assert_eq!(symbol_overlap(&a, &c), 0);
    }

    #[test]
    fn config_bounds() {
        let mut c = LiteralizeConfig::default();
        assert!(c.validate().is_ok());
        c.required_overlap = 6;
        assert!(c.validate().is_err());
        c.required_overlap = 0;
        assert!(c.validate().is_err());
        c = LiteralizeConfig { n_candidates: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rank_single_and_non_verb_candidates() {
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(r#"{"verb_scores":{"by_surface":{"flowed":0.3}}}"#).unwrap(),
        );
        let masked = "The river [MASK] to the sea";
        let one = [MaskedPrediction { surface: "flowed".into(), prob: 0.4 }];
        let ranked = rank_by_literalness(masked, &one, &reg).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].surface, "flowed");

        let with_noun = [
            MaskedPrediction { surface: "quickly".into(), prob: 0.5 },
            MaskedPrediction { surface: "flowed".into(), prob: 0.4 },
        ];
        assert_eq!(rank_by_literalness(masked, &with_noun, &reg).unwrap().len(), 1);
        assert!(rank_by_literalness(masked, &[], &reg).is_err());
    }

    #[test]
    fn no_survivor_yields_none() {
        // Every candidate has its own symbols, none equal to the input's.
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(
                r#"{
                "masked": {"fallback": [["ran", 0.5], ["flowed", 0.3]]},
                "symbols": {"by_lemma": {
                    "surge": ["love", "loss", "despair", "sorrow", "loneliness"],
                    "run": ["fear", "anger", "death", "life", "time"],
                    "flow": ["peace", "love", "happiness", "joy", "hope"]
                }}
            }"#,
            )
            .unwrap(),
        );
        let s = Sentence::user(SURGED).unwrap();
        let v = verb_at(&s, 4, &reg);
        assert_eq!(literalize(&s, &v, &LiteralizeConfig::default(), &reg).unwrap(), None);
    }

    #[test]
    fn original_verb_is_excluded() {
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(
                r#"{
                "masked": {"fallback": [["surged", 0.5], ["surges", 0.2], ["flowed", 0.1]]},
                "verb_scores": {"by_surface": {"surged": 0.0, "surges": 0.0, "flowed": 0.4}}
            }"#,
            )
            .unwrap(),
        );
        let s = Sentence::user(SURGED).unwrap();
        let v = verb_at(&s, 4, &reg);
        let pair = literalize(&s, &v, &LiteralizeConfig::default(), &reg).unwrap().unwrap();
        assert_eq!(pair.literal_verb, "flowed");

        let keep = LiteralizeConfig { exclude_original_verb: false, ..Default::default() };
        let pair = literalize(&s, &v, &keep, &reg).unwrap().unwrap();
        assert_eq!(pair.literal_verb, "surged");
    }

    #[test]
    fn input_symbol_failure_yields_none() {
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(r#"{"symbols": {"fail_on": ["surged"]}}"#).unwrap(),
        );
        let s = Sentence::user(SURGED).unwrap();
        let v = verb_at(&s, 4, &reg);
        assert_eq!(literalize(&s, &v, &LiteralizeConfig::default(), &reg).unwrap(), None);
    }
}
