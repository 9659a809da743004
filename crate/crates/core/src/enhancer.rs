//! Poem enhancement: split into quatrains, pick the most literal eligible
//! verb of each quatrain, and rewrite that line metaphorically.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::AdapterRegistry;
use crate::detector::{default_stop_verbs, eligible_verbs};
use crate::error::{Error, Result};
use crate::generator::{generate_metaphor, RescoringConfig};
use crate::text::{replace_token, tokenize};
use crate::types::{Sentence, SentenceSource, VerbOccurrence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quatrain {
    pub lines: [String; 4],
    pub source_poem_id: String,
}

impl Quatrain {
    pub fn new(lines: [String; 4], source_poem_id: impl Into<String>) -> Result<Self> {
        if let Some(i) = lines.iter().position(|l| l.trim().is_empty()) {
            return Err(Error::invalid(format!("quatrain line {i} is empty")));
        }
        Ok(Quatrain {
            lines,
            source_poem_id: source_poem_id.into(),
        })
    }

    fn sentence(&self, line: usize) -> Sentence {
        Sentence {
            id: format!("{}:{line}", self.source_poem_id),
            text: self.lines[line].clone(),
            source: SentenceSource::User,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuatrainSplit {
    pub quatrains: Vec<Quatrain>,
    /// Trailing lines that did not fill a quatrain.
    pub remainder: usize,
}

/// Groups non-blank lines into consecutive quatrains; blank lines (stanza
/// breaks) are ignored.
pub fn split_quatrains<S: AsRef<str>>(poem: &[S], poem_id: &str) -> QuatrainSplit {
    let lines: Vec<&str> = poem.iter().map(|l| l.as_ref()).filter(|l| !l.trim().is_empty()).collect();
    let chunks = lines.chunks_exact(4);
    let remainder = chunks.remainder().len();
    let quatrains = chunks
        .map(|c| Quatrain {
            lines: [c[0], c[1], c[2], c[3]].map(String::from),
            source_poem_id: poem_id.to_string(),
        })
        .collect();
    QuatrainSplit { quatrains, remainder }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub line_index: usize,
    pub verb: VerbOccurrence,
    pub p_literal: f64,
}

/// Global argmax of p_literal over every non-stop verb of every line; ties
/// go to the earlier (line, token).
pub fn pick_target(q: &Quatrain, registry: &AdapterRegistry, stop_verbs: &HashSet<String>) -> Result<Option<Target>> {
    let mut best: Option<Target> = None;
    for line in 0..4 {
        for (verb, score) in eligible_verbs(&q.sentence(line), registry, stop_verbs)? {
            if best.as_ref().is_none_or(|b| score.p_literal() > b.p_literal) {
                best = Some(Target {
                    line_index: line,
                    verb,
                    p_literal: score.p_literal(),
                });
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffStatus {
    Rewritten,
    NoEligibleVerb,
    GenerationFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub status: DiffStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub old_verb: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_verb: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl DiffRecord {
    fn unchanged(status: DiffStatus, target: Option<&Target>, reason: Option<String>) -> Self {
        DiffRecord {
            status,
            line: target.map(|t| t.line_index),
            old_verb: target.map(|t| t.verb.surface.clone()),
            new_verb: None,
            reason,
        }
    }

    pub fn is_change(&self) -> bool {
        self.status == DiffStatus::Rewritten
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancedQuatrain {
    pub before: Quatrain,
    pub after: Quatrain,
    pub diff: DiffRecord,
}

/// Rewrites the target verb of one quatrain. Only the generated token at the
/// target position is spliced into the original line, so the rest of the
/// line keeps its bytes. Failures leave the quatrain unchanged and are
/// recorded in the diff.
pub fn enhance_quatrain(
    q: &Quatrain,
    rescoring: &RescoringConfig,
    registry: &AdapterRegistry,
    stop_verbs: &HashSet<String>,
) -> EnhancedQuatrain {
    let unchanged = |diff| EnhancedQuatrain {
        before: q.clone(),
        after: q.clone(),
        diff,
    };
    let target = match pick_target(q, registry, stop_verbs) {
        Ok(Some(t)) => t,
        Ok(None) => return unchanged(DiffRecord::unchanged(DiffStatus::NoEligibleVerb, None, None)),
        Err(e) => {
            return unchanged(DiffRecord::unchanged(DiffStatus::GenerationFailed, None, Some(e.to_string())))
        }
    };
    let fail = |reason: String| unchanged(DiffRecord::unchanged(DiffStatus::GenerationFailed, Some(&target), Some(reason)));

    let line = q.sentence(target.line_index);
    let hyp = match generate_metaphor(&line, rescoring, registry) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    if hyp.tokens.len() != tokenize(&line.text).len() {
        return fail(format!(
            "generated {} tokens for a {}-token line",
            hyp.tokens.len(),
            tokenize(&line.text).len()
        ));
    }
    let new_verb = hyp.tokens[target.verb.token_index].clone();
    if new_verb == target.verb.surface {
        return fail("generator kept the original verb".into());
    }
    let rewritten = match replace_token(&line.text, target.verb.token_index, &new_verb) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let mut after = q.clone();
    after.lines[target.line_index] = rewritten;
    EnhancedQuatrain {
        before: q.clone(),
        after,
        diff: DiffRecord {
            status: DiffStatus::Rewritten,
            line: Some(target.line_index),
            old_verb: Some(target.verb.surface),
            new_verb: Some(new_verb),
            reason: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancedPoem {
    pub quatrains: Vec<EnhancedQuatrain>,
    pub remainder: usize,
}

/// Splits `poem` and enhances every quatrain concurrently, in order.
pub fn enhance_poem<S: AsRef<str>>(
    poem: &[S],
    poem_id: &str,
    rescoring: &RescoringConfig,
    registry: &AdapterRegistry,
) -> Result<EnhancedPoem> {
    rescoring.validate()?;
    let split = split_quatrains(poem, poem_id);
    let stop = default_stop_verbs();
    let quatrains = registry.install(|| {
        split
            .quatrains
            .par_iter()
            .map(|q| enhance_quatrain(q, rescoring, registry, &stop))
            .collect()
    })?;
    Ok(EnhancedPoem {
        quatrains,
        remainder: split.remainder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::fake::Fixture;

    fn lines(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("line {i}")).collect()
    }

    #[test]
    fn split_counts() {
        let s = split_quatrains(&lines(8), "p");
        assert_eq!((s.quatrains.len(), s.remainder), (2, 0));
        let s = split_quatrains(&lines(3), "p");
        assert_eq!((s.quatrains.len(), s.remainder), (0, 3));
        let s = split_quatrains(&lines(10), "p");
        assert_eq!((s.quatrains.len(), s.remainder), (2, 2));
        let flat: Vec<String> = s.quatrains.iter().flat_map(|q| q.lines.clone()).collect();
        assert_eq!(flat, lines(8));
    }

    #[test]
    fn split_skips_stanza_breaks() {
        let poem = ["a", "b", "", "c", "d", "  ", "e"];
        let s = split_quatrains(&poem, "p");
        assert_eq!(s.quatrains[0].lines, ["a", "b", "c", "d"].map(String::from));
        assert_eq!(s.remainder, 1);
    }

    #[test]
    fn quatrain_rejects_empty_line() {
        assert!(Quatrain::new(["a", "", "c", "d"].map(String::from), "p").is_err());
    }

    #[test]
    fn stop_verbs_only_is_unchanged() {
        let reg = AdapterRegistry::from_fixture(Fixture::default());
        let q = Quatrain::new(
            ["The sky is grey", "The night was long", "We are here", "They had time"].map(String::from),
            "p",
        )
        .unwrap();
        let stop = default_stop_verbs();
        assert_eq!(pick_target(&q, &reg, &stop).unwrap(), None);
        let e = enhance_quatrain(&q, &RescoringConfig::default(), &reg, &stop);
        assert_eq!(e.after, q);
        assert_eq!(e.diff.status, DiffStatus::NoEligibleVerb);
        assert_eq!(e.diff.line, None);
    }

    #[test]
    fn equal_scores_pick_earliest_line() {
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(r#"{"verb_scores": {"default": 0.3}}"#).unwrap(),
        );
        let q = Quatrain::new(
            ["The wind moved", "The sky is grey", "The river flowed", "The night was long"].map(String::from),
            "p",
        )
        .unwrap();
        let t = pick_target(&q, &reg, &default_stop_verbs()).unwrap().unwrap();
        assert_eq!((t.line_index, t.verb.surface.as_str()), (0, "moved"));
    }

    #[test]
    fn generation_failure_is_recorded() {
        let reg = AdapterRegistry::from_fixture(
            Fixture::from_json(r#"{"seq2seq": {"fail_on": ["river"]}, "verb_scores": {"default": 0.3}}"#).unwrap(),
        );
        let q = Quatrain::new(
            ["The river flowed", "The sky is grey", "The night was long", "We are here"].map(String::from),
            "p",
        )
        .unwrap();
        let e = enhance_quatrain(&q, &RescoringConfig::default(), &reg, &default_stop_verbs());
        assert_eq!(e.after, q);
        assert_eq!(e.diff.status, DiffStatus::GenerationFailed);
        assert_eq!(e.diff.old_verb.as_deref(), Some("flowed"));
    }
}
