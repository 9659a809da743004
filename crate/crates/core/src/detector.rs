//! Metaphoric-verb detection over sentences and whole corpora.

use std::collections::HashSet;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::AdapterRegistry;
use crate::error::{Error, Result};
use crate::text::extract_verbs;
use crate::types::{MetaphoricityScore, Sentence, SentenceSource, VerbOccurrence};

pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// Lines scored concurrently per batch while streaming a corpus.
const FILTER_BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum verb-level p_metaphoric for a sentence to count as metaphoric.
    pub confidence_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            confidence_threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl DetectorConfig {
    pub fn new(confidence_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(Error::InvalidConfig(format!(
                "confidence threshold {confidence_threshold} outside [0, 1]"
            )));
        }
        Ok(DetectorConfig {
            confidence_threshold,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total_lines: usize,
    /// Lines whose best verb is at least as likely metaphoric as literal, or
    /// that were retained.
    pub predicted_metaphoric: usize,
    pub retained_high_confidence: usize,
    /// Blank lines and lines below the threshold.
    pub rejected: usize,
    /// Lines dropped because an adapter failed.
    pub skipped_errors: usize,
}

/// Scores every extracted verb, in token order.
pub fn score_all_verbs(
    sentence: &Sentence,
    registry: &AdapterRegistry,
) -> Result<Vec<(VerbOccurrence, MetaphoricityScore)>> {
    extract_verbs(sentence, &*registry.tagger)?
        .into_iter()
        .map(|v| {
            let s = registry.verb_scorer.score_verb(sentence, &v)?;
            Ok((v, s))
        })
        .collect()
}

/// Highest p_metaphoric; ties go to the lowest token index.
fn best_metaphoric(scored: &[(VerbOccurrence, MetaphoricityScore)]) -> Option<&(VerbOccurrence, MetaphoricityScore)> {
    scored.iter().fold(None, |best, cur| match best {
        Some(b) if b.1.p_metaphoric() >= cur.1.p_metaphoric() => Some(b),
        _ => Some(cur),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub is_metaphoric: bool,
    /// Argmax-p_metaphoric verb among those meeting the threshold.
    pub best_verb: Option<(VerbOccurrence, MetaphoricityScore)>,
}

pub fn is_metaphoric(sentence: &Sentence, config: &DetectorConfig, registry: &AdapterRegistry) -> Result<Detection> {
    let scored = score_all_verbs(sentence, registry)?;
    Ok(decide(&scored, config))
}

fn decide(scored: &[(VerbOccurrence, MetaphoricityScore)], config: &DetectorConfig) -> Detection {
    let qualifying: Vec<_> = scored
        .iter()
        .filter(|(_, s)| s.p_metaphoric() >= config.confidence_threshold)
        .cloned()
        .collect();
    let best_verb = best_metaphoric(&qualifying).cloned();
    Detection {
        is_metaphoric: best_verb.is_some(),
        best_verb,
    }
}

/// One retained corpus line, serialized as the retained-sentence JSONL record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedSentence {
    pub id: String,
    pub text: String,
    pub verb_index: usize,
    pub p_metaphoric: f64,
    #[serde(skip)]
    pub verb: Option<VerbOccurrence>,
}

impl RetainedSentence {
    pub fn sentence(&self) -> Sentence {
        Sentence {
            id: self.id.clone(),
            text: self.text.clone(),
            source: SentenceSource::PoetryCorpus,
        }
    }
}

enum LineOutcome {
    Blank,
    Scored {
        retained: Option<RetainedSentence>,
        predicted: bool,
    },
    Failed,
}

fn classify_line(line_no: usize, line: &str, config: &DetectorConfig, registry: &AdapterRegistry) -> LineOutcome {
    let Ok(sentence) = Sentence::new(format!("line-{line_no}"), line, SentenceSource::PoetryCorpus) else {
        return LineOutcome::Blank;
    };
    let scored = match score_all_verbs(&sentence, registry) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("skipping line {line_no}: {e}");
            return LineOutcome::Failed;
        }
    };
    let detection = decide(&scored, config);
    let top = best_metaphoric(&scored).map(|(_, s)| s.p_metaphoric());
    let predicted = detection.is_metaphoric || top.is_some_and(|p| p >= 0.5);
    let retained = detection.best_verb.map(|(verb, score)| RetainedSentence {
        id: sentence.id.clone(),
        text: sentence.text.clone(),
        verb_index: verb.token_index,
        p_metaphoric: score.p_metaphoric(),
        verb: Some(verb),
    });
    LineOutcome::Scored { retained, predicted }
}

/// Streams `reader` line by line, calling `sink` for each retained sentence
/// in input order. Lines are scored concurrently in batches; lines whose
/// adapters fail are skipped and counted. Read errors abort.
pub fn filter_corpus<R, F>(reader: R, config: &DetectorConfig, registry: &AdapterRegistry, mut sink: F) -> Result<FilterReport>
where
    R: BufRead,
    F: FnMut(RetainedSentence) -> Result<()>,
{
    let mut report = FilterReport::default();
    let mut lines = reader.lines();
    let mut line_no = 0usize;
    loop {
        let mut batch = Vec::with_capacity(FILTER_BATCH);
        for line in lines.by_ref().take(FILTER_BATCH) {
            line_no += 1;
            batch.push((line_no, line?));
        }
        if batch.is_empty() {
            break;
        }
        let outcomes: Vec<LineOutcome> = registry.install(|| {
            batch
                .par_iter()
                .map(|(n, l)| classify_line(*n, l, config, registry))
                .collect()
        })?;
        for outcome in outcomes {
            report.total_lines += 1;
            match outcome {
                LineOutcome::Blank => report.rejected += 1,
                LineOutcome::Failed => report.skipped_errors += 1,
                LineOutcome::Scored { retained, predicted } => {
                    if predicted {
                        report.predicted_metaphoric += 1;
                    }
                    match retained {
                        Some(r) => {
                            report.retained_high_confidence += 1;
                            sink(r)?;
                        }
                        None => report.rejected += 1,
                    }
                }
            }
        }
    }
    Ok(report)
}

/// In-memory convenience over [`filter_corpus`].
pub fn filter_lines<S: AsRef<str>>(
    lines: &[S],
    config: &DetectorConfig,
    registry: &AdapterRegistry,
) -> Result<(Vec<RetainedSentence>, FilterReport)> {
    let text: String = lines.iter().map(|l| format!("{}\n", l.as_ref())).collect();
    let mut out = Vec::new();
    let report = filter_corpus(text.as_bytes(), config, registry, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok((out, report))
}

pub fn default_stop_verbs() -> HashSet<String> {
    ["is", "was", "are", "were", "have", "had"]
        .into_iter()
        .map(String::from)
        .collect()
}

/// A verb is a stop verb when its lowercase surface or its lemma is listed.
pub fn is_stop_verb(verb: &VerbOccurrence, stop_verbs: &HashSet<String>) -> bool {
    stop_verbs.contains(&verb.surface.to_lowercase()) || stop_verbs.contains(&verb.lemma)
}

/// Non-stop verbs with their scores, in token order.
pub fn eligible_verbs(
    sentence: &Sentence,
    registry: &AdapterRegistry,
    stop_verbs: &HashSet<String>,
) -> Result<Vec<(VerbOccurrence, MetaphoricityScore)>> {
    extract_verbs(sentence, &*registry.tagger)?
        .into_iter()
        .filter(|v| !is_stop_verb(v, stop_verbs))
        .map(|v| {
            let s = registry.verb_scorer.score_verb(sentence, &v)?;
            Ok((v, s))
        })
        .collect()
}

/// The non-stop verb with the highest p_literal; ties go to the earlier token.
pub fn most_literal_verb(
    sentence: &Sentence,
    registry: &AdapterRegistry,
    stop_verbs: &HashSet<String>,
) -> Result<Option<(VerbOccurrence, MetaphoricityScore)>> {
    let scored = eligible_verbs(sentence, registry, stop_verbs)?;
    Ok(scored.into_iter().fold(None, |best, cur| match best {
        Some(b) if b.1.p_literal() >= cur.1.p_literal() => Some(b),
        _ => Some(cur),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::fake::Fixture;

    fn registry(json: &str) -> AdapterRegistry {
        AdapterRegistry::from_fixture(Fixture::from_json(json).unwrap())
    }

    fn s(text: &str) -> Sentence {
        Sentence::user(text).unwrap()
    }

    #[test]
    fn threshold_decisions() {
        let reg = registry(r#"{"verb_scores":{"by_surface":{"surged":0.99,"walks":0.5,"runs":0.5}}}"#);
        let cfg = DetectorConfig::default();
        let d = is_metaphoric(&s("The turbulent feelings that surged through his soul ."), &cfg, &reg).unwrap();
        assert!(d.is_metaphoric);
        assert_eq!(d.best_verb.unwrap().0.surface, "surged");

        let d = is_metaphoric(&s("He runs and she walks"), &cfg, &reg).unwrap();
        assert_eq!(d, Detection { is_metaphoric: false, best_verb: None });

        let floor = DetectorConfig::new(0.0).unwrap();
        assert!(is_metaphoric(&s("He runs and she walks"), &floor, &reg).unwrap().is_metaphoric);
        assert!(!is_metaphoric(&s("night night night"), &floor, &reg).unwrap().is_metaphoric);
    }

    #[test]
    fn best_verb_ties_go_to_first_token() {
        let reg = registry(r#"{"verb_scores":{"by_surface":{"runs":0.97,"walks":0.97}}}"#);
        let d = is_metaphoric(&s("He runs and she walks"), &DetectorConfig::default(), &reg).unwrap();
        assert_eq!(d.best_verb.unwrap().0.token_index, 1);
    }

    #[test]
    fn threshold_bounds() {
        assert!(DetectorConfig::new(1.2).is_err());
        assert!(DetectorConfig::new(-0.1).is_err());
    }

    #[test]
    fn empty_corpus() {
        let reg = registry("{}");
        let (out, report) = filter_lines::<&str>(&[], &DetectorConfig::default(), &reg).unwrap();
        assert!(out.is_empty());
        assert_eq!(report, FilterReport::default());
    }

    #[test]
    fn adapter_failures_are_skipped_and_counted() {
        let reg = registry(r#"{"verb_scores":{"default":0.99,"fail_on":["broken"]}}"#);
        let lines = ["the wind howled", "the broken bell rang", "", "she wept"];
        let (out, report) = filter_lines(&lines, &DetectorConfig::default(), &reg).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(report.total_lines, 4);
        assert_eq!(report.skipped_errors, 1);
        assert_eq!(report.rejected, 1);
        assert_eq!(
            report.total_lines,
            report.retained_high_confidence + report.rejected + report.skipped_errors
        );
        assert_eq!(out[0].id, "line-1");
        assert_eq!(out[1].id, "line-4");
    }

    #[test]
    fn most_literal_skips_stop_verbs() {
        let reg = registry(r#"{"verb_scores":{"by_surface":{"are":0.0,"covered":0.2,"is":0.0}}}"#);
        let stop = default_stop_verbs();
        let v = most_literal_verb(&s("the valleys are covered with misty veils"), &reg, &stop)
            .unwrap()
            .unwrap();
        assert_eq!(v.0.surface, "covered");
        assert!(most_literal_verb(&s("the sky is grey"), &reg, &stop).unwrap().is_none());
    }

    #[test]
    fn most_literal_tie_goes_to_earlier_token() {
        let reg = registry(r#"{"verb_scores":{"default":0.3}}"#);
        let v = most_literal_verb(&s("He runs and she walks"), &reg, &default_stop_verbs())
            .unwrap()
            .unwrap();
        assert_eq!(v.0.surface, "runs");
    }
}
