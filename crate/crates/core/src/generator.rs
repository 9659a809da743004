//! Metaphor generation by sampling from the sequence model and reranking the
//! samples with the sentence-level metaphor discriminator.
//!
//! The rescored objective of a hypothesis z is `nll(z) − λ·a(z)`, where `a`
//! is the discriminator's probability that z is metaphorical. Lower is
//! better, so λ > 0 pulls metaphorical hypotheses forward.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::AdapterRegistry;
use crate::corpus::write_json_file;
use crate::error::{Error, Result};
use crate::evaluator::cosine;
use crate::text::{detokenize, splice_tokens};
use crate::types::{DecodedHypothesis, LiteralMetaphorPair, Sentence, SentenceSource};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_HYPOTHESES: usize = 10;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescoringConfig {
    pub lambda: f64,
    pub k: usize,
    pub num_hypotheses: usize,
    pub seed: u64,
}

impl Default for RescoringConfig {
    fn default() -> Self {
        RescoringConfig {
            lambda: DEFAULT_LAMBDA,
            k: DEFAULT_K,
            num_hypotheses: DEFAULT_HYPOTHESES,
            seed: 0,
        }
    }
}

impl RescoringConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.k == 0 || self.num_hypotheses == 0 {
            return Err(Error::InvalidConfig("k and num_hypotheses must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(())
}

/// Negative log-likelihood, −Σ log p(z_i | z_<i, x).
pub fn nll(hyp: &DecodedHypothesis) -> f64 {
    -hyp.token_logprobs.iter().sum::<f64>() + 0.0
}

/// `nll − λ·disc`. Requires a discriminator score.
pub fn combined_score(hyp: &DecodedHypothesis, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let disc = hyp
        .disc_score
        .ok_or_else(|| Error::invalid("hypothesis has no discriminator score"))?;
    Ok(nll(hyp) - lambda * disc)
}

/// Surface text of a hypothesis. With a source whose token count matches,
/// the source spacing is kept.
pub fn hypothesis_text(source: Option<&str>, hyp: &DecodedHypothesis) -> String {
    match source {
        Some(src) => splice_tokens(src, &hyp.tokens),
        None => detokenize(&hyp.tokens),
    }
}

/// Order used after scoring: combined ascending, then nll ascending, then text.
pub fn rerank_order(a: &(DecodedHypothesis, String), b: &(DecodedHypothesis, String)) -> Ordering {
    let key = |h: &DecodedHypothesis| h.combined.unwrap_or(f64::INFINITY);
    key(&a.0)
        .total_cmp(&key(&b.0))
        .then_with(|| nll(&a.0).total_cmp(&nll(&b.0)))
        .then_with(|| a.1.cmp(&b.1))
}

/// A scored hypothesis together with its surface text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHypothesis {
    pub text: String,
    pub hypothesis: DecodedHypothesis,
}

impl RankedHypothesis {
    pub fn nll(&self) -> f64 {
        nll(&self.hypothesis)
    }

    pub fn disc(&self) -> f64 {
        self.hypothesis.disc_score.unwrap_or(0.0)
    }

    pub fn combined(&self) -> f64 {
        self.hypothesis.combined.unwrap_or(f64::INFINITY)
    }
}

/// Scores each hypothesis with the discriminator, fills `disc_score` and
/// `combined`, and sorts best first. Hypotheses whose scoring fails are
/// dropped. `source` only affects the text handed to the discriminator.
pub fn rerank_with_source(
    hyps: Vec<DecodedHypothesis>,
    lambda: f64,
    source: Option<&str>,
    registry: &AdapterRegistry,
) -> Result<Vec<RankedHypothesis>> {
    check_lambda(lambda)?;
    let scored: Vec<Option<(DecodedHypothesis, String)>> = registry.install(|| {
        hyps.into_par_iter()
            .map(|mut h| {
                let text = hypothesis_text(source, &h);
                match registry.sentence_scorer.score_sentence(&text) {
                    Ok(disc) => {
                        h.disc_score = Some(disc);
                        h.combined = Some(nll(&h) - lambda * disc);
                        Some((h, text))
                    }
                    Err(e) => {
                        log::warn!("dropping hypothesis `{text}`: {e}");
                        None
                    }
                }
            })
            .collect()
    })?;
    let mut scored: Vec<(DecodedHypothesis, String)> = scored.into_iter().flatten().collect();
    scored.sort_by(rerank_order);
    Ok(scored
        .into_iter()
        .map(|(hypothesis, text)| RankedHypothesis { text, hypothesis })
        .collect())
}

pub fn rerank(hyps: Vec<DecodedHypothesis>, lambda: f64, registry: &AdapterRegistry) -> Result<Vec<DecodedHypothesis>> {
    Ok(rerank_with_source(hyps, lambda, None, registry)?
        .into_iter()
        .map(|r| r.hypothesis)
        .collect())
}

/// Samples, drops repeated token sequences (first kept), and reranks.
pub fn generate_candidates(
    literal: &Sentence,
    rescoring: &RescoringConfig,
    registry: &AdapterRegistry,
) -> Result<Vec<RankedHypothesis>> {
    rescoring.validate()?;
    let sampled = registry
        .seq2seq
        .sample(&literal.text, rescoring.k, rescoring.num_hypotheses, rescoring.seed)?;
    let mut seen = HashSet::new();
    let unique: Vec<DecodedHypothesis> = sampled.into_iter().filter(|h| seen.insert(h.tokens.clone())).collect();
    let ranked = rerank_with_source(unique, rescoring.lambda, Some(&literal.text), registry)?;
    if ranked.is_empty() {
        return Err(Error::GenerationFailed(format!(
            "every hypothesis for `{}` failed scoring",
            literal.text
        )));
    }
    Ok(ranked)
}

/// The lowest-combined hypothesis for `literal`.
pub fn generate_metaphor(
    literal: &Sentence,
    rescoring: &RescoringConfig,
    registry: &AdapterRegistry,
) -> Result<DecodedHypothesis> {
    let mut ranked = generate_candidates(literal, rescoring, registry)?;
    Ok(ranked.swap_remove(0).hypothesis)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub objective: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub best_lambda: f64,
    pub scores: Vec<LambdaScore>,
}

/// Tuning objective for one item: mean of the discriminator score of the
/// output and the cosine of input and output embeddings.
pub fn tuning_objective(input: &str, output: &str, registry: &AdapterRegistry) -> Result<f64> {
    let disc = registry.sentence_scorer.score_sentence(output)?;
    let a = registry.embedder.embed(input)?;
    let b = registry.embedder.embed(output)?;
    Ok(0.5 * (disc + cosine(&a, &b)))
}

/// Grid search over λ on the literal side of `valid_pairs`. Items whose
/// generation fails contribute 0. Ties go to the smallest λ.
pub fn tune_lambda(
    valid_pairs: &[LiteralMetaphorPair],
    grid: &[f64],
    base: &RescoringConfig,
    registry: &AdapterRegistry,
) -> Result<LambdaReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("lambda grid is empty".into()));
    }
    if valid_pairs.is_empty() {
        return Err(Error::invalid("no validation pairs"));
    }
    for l in grid {
        check_lambda(*l)?;
    }
    let literals: Vec<Sentence> = valid_pairs
        .iter()
        .enumerate()
        .map(|(i, p)| Sentence::new(format!("valid-{}", i + 1), p.literal_text.clone(), SentenceSource::TestSet))
        .collect::<Result<_>>()?;

    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let config = RescoringConfig { lambda, ..*base };
        let per_item: Vec<Option<f64>> = registry.install(|| {
            literals
                .par_iter()
                .map(|s| {
                    let hyp = generate_metaphor(s, &config, registry).ok()?;
                    let out = hypothesis_text(Some(&s.text), &hyp);
                    tuning_objective(&s.text, &out, registry).ok()
                })
                .collect()
        })?;
        let failures = per_item.iter().filter(|o| o.is_none()).count();
        let objective = per_item.iter().map(|o| o.unwrap_or(0.0)).sum::<f64>() / literals.len() as f64;
        scores.push(LambdaScore {
            lambda,
            objective,
            failures,
        });
    }
    let best = scores
        .iter()
        .fold(None::<&LambdaScore>, |best, s| match best {
            Some(b) if b.objective > s.objective || (b.objective == s.objective && b.lambda <= s.lambda) => Some(b),
            _ => Some(s),
        })
        .expect("grid is non-empty");
    Ok(LambdaReport {
        best_lambda: best.lambda,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointSelection {
    #[default]
    ValidPerplexity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub train_path: PathBuf,
    pub valid_path: PathBuf,
    pub epochs: u32,
    pub max_tokens_per_batch: u32,
    pub checkpoint_selection: CheckpointSelection,
}

impl TrainingConfig {
    pub fn new(train_path: impl Into<PathBuf>, valid_path: impl Into<PathBuf>) -> Self {
        TrainingConfig {
            train_path: train_path.into(),
            valid_path: valid_path.into(),
            epochs: 70,
            max_tokens_per_batch: 1024,
            checkpoint_selection: CheckpointSelection::ValidPerplexity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.max_tokens_per_batch == 0 {
            return Err(Error::InvalidConfig("max_tokens_per_batch must be at least 1".into()));
        }
        for p in [&self.train_path, &self.valid_path] {
            if !p.is_file() {
                return Err(Error::invalid(format!("dataset file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// An external fine-tuning job runner.
pub trait TrainerBackend {
    fn name(&self) -> &str;

    /// Trains and returns the URI of the checkpoint chosen by the configured
    /// selection rule, or `None` when nothing was trained.
    fn train(&self, config: &TrainingConfig, run_dir: &Path) -> Result<Option<String>>;
}

/// Records the configuration without training.
#[derive(Debug, Clone, Copy, Default)]
pub struct DryRunBackend;

impl TrainerBackend for DryRunBackend {
    fn name(&self) -> &str {
        "dry-run"
    }

    fn train(&self, _config: &TrainingConfig, _run_dir: &Path) -> Result<Option<String>> {
        Ok(None)
    }
}

/// Runs an external training program. It receives
/// `--train <path> --valid <path> --epochs <n> --max-tokens <n>
/// --checkpoint-selection valid-perplexity --save-dir <run_dir>` after the
/// configured arguments and reports its chosen checkpoint on a stdout line
/// `checkpoint: <uri>`.
#[derive(Debug, Clone)]
pub struct CommandBackend {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl TrainerBackend for CommandBackend {
    fn name(&self) -> &str {
        "command"
    }

    fn train(&self, config: &TrainingConfig, run_dir: &Path) -> Result<Option<String>> {
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg("--train")
            .arg(&config.train_path)
            .arg("--valid")
            .arg(&config.valid_path)
            .args(["--epochs", &config.epochs.to_string()])
            .args(["--max-tokens", &config.max_tokens_per_batch.to_string()])
            .args(["--checkpoint-selection", "valid-perplexity"])
            .arg("--save-dir")
            .arg(run_dir)
            .output()
            .map_err(|e| Error::Backend(format!("{}: {e}", self.program.display())))?;
        if !output.status.success() {
            return Err(Error::Backend(String::from_utf8_lossy(&output.stderr).trim_end().to_string()));
        }
        Ok(String::from_utf8_lossy(&output.stdout)
            .lines()
            .filter_map(|l| l.strip_prefix("checkpoint:"))
            .last()
            .map(|s| s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub backend: String,
    pub config: TrainingConfig,
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHandle {
    pub manifest_path: PathBuf,
    pub checkpoint: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Validates the config, runs the backend and writes `manifest.json` into
/// `run_dir`. Backend errors are returned unchanged.
pub fn finetune(config: &TrainingConfig, backend: &dyn TrainerBackend, run_dir: &Path) -> Result<CheckpointHandle> {
    config.validate()?;
    std::fs::create_dir_all(run_dir)?;
    let checkpoint = backend.train(config, run_dir)?;
    let manifest = RunManifest {
        backend: backend.name().to_string(),
        config: config.clone(),
        checkpoint: checkpoint.clone(),
    };
    let manifest_path = run_dir.join(MANIFEST_FILE);
    write_json_file(&manifest, &manifest_path)?;
    Ok(CheckpointHandle {
        manifest_path,
        checkpoint,
    })
}
