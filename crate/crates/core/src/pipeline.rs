//! Corpus builder: poetry lines → detection → literalization → dedup → split.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::AdapterRegistry;
use crate::corpus::{write_json_file, write_jsonl, write_pairs};
use crate::detector::{filter_corpus, DetectorConfig, FilterReport, RetainedSentence};
use crate::error::{Error, Result};
use crate::literalizer::{literalize, LiteralizeConfig};
use crate::text::{replace_token, MASK_TOKEN};
use crate::types::LiteralMetaphorPair;

pub const DEFAULT_TRAIN_COUNT: usize = 90_000;
pub const DEFAULT_VALID_COUNT: usize = 3_498;

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALID_FILE: &str = "valid.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const RETAINED_FILE: &str = "retained.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetVariant {
    #[default]
    Pairs,
    /// Source side is the metaphor with its verb masked.
    #[serde(alias = "masked")]
    MetaphorMasked,
}

impl std::str::FromStr for DatasetVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" => Ok(DatasetVariant::Pairs),
            "masked" | "metaphor-masked" => Ok(DatasetVariant::MetaphorMasked),
            other => Err(Error::InvalidConfig(format!("unknown dataset variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub detector: DetectorConfig,
    pub literalize: LiteralizeConfig,
    pub train_count: usize,
    pub valid_count: usize,
    pub seed: u64,
    pub variant: DatasetVariant,
}

impl PipelineConfig {
    pub fn new(input_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, seed: u64) -> Self {
        PipelineConfig {
            input_path: input_path.into(),
            output_dir: output_dir.into(),
            detector: DetectorConfig::default(),
            literalize: LiteralizeConfig::default(),
            train_count: DEFAULT_TRAIN_COUNT,
            valid_count: DEFAULT_VALID_COUNT,
            seed,
            variant: DatasetVariant::Pairs,
        }
    }
}

/// Literalization yield over the retained sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YieldReport {
    pub attempted: usize,
    pub literalized: usize,
    pub no_survivor: usize,
    pub errors: usize,
    pub duplicates_removed: usize,
    pub pairs_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub filter: FilterReport,
    #[serde(rename = "yield")]
    pub yield_: YieldReport,
    pub train: usize,
    pub valid: usize,
    pub seed: u64,
    pub variant: DatasetVariant,
    pub threshold: f64,
    pub candidates: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOutput {
    pub train_path: PathBuf,
    pub valid_path: PathBuf,
    pub report_path: PathBuf,
    pub report: RunReport,
}

/// Runs the full corpus build and writes train, valid and report files into
/// `config.output_dir`. Identical inputs, config and adapters give
/// byte-identical files.
pub fn build_dataset(config: &PipelineConfig, registry: &AdapterRegistry) -> Result<DatasetOutput> {
    config.literalize.validate()?;
    DetectorConfig::new(config.detector.confidence_threshold)?;
    fs::create_dir_all(&config.output_dir)?;

    let reader = BufReader::new(File::open(&config.input_path)?);
    let mut retained = Vec::new();
    let filter = filter_corpus(reader, &config.detector, registry, |r| {
        retained.push(r);
        Ok(())
    })?;
    write_jsonl(&retained, BufWriter::new(File::create(config.output_dir.join(RETAINED_FILE))?))?;

    let (pairs, mut yield_) = literalize_all(&retained, &config.literalize, registry)?;
    let pairs = dedup_pairs(pairs, &mut yield_);
    let pairs = match config.variant {
        DatasetVariant::Pairs => pairs,
        DatasetVariant::MetaphorMasked => make_masked_variant(pairs)?,
    };
    yield_.pairs_out = pairs.len();

    let (train, valid) = split_pairs(pairs, config.train_count, config.valid_count, config.seed);
    let out = &config.output_dir;
    let (train_path, valid_path, report_path) = (out.join(TRAIN_FILE), out.join(VALID_FILE), out.join(REPORT_FILE));
    write_pairs(&train, &train_path)?;
    write_pairs(&valid, &valid_path)?;
    let report = RunReport {
        filter,
        yield_,
        train: train.len(),
        valid: valid.len(),
        seed: config.seed,
        variant: config.variant,
        threshold: config.detector.confidence_threshold,
        candidates: config.literalize.n_candidates,
        overlap: config.literalize.required_overlap,
    };
    write_json_file(&report, &report_path)?;
    Ok(DatasetOutput {
        train_path,
        valid_path,
        report_path,
        report,
    })
}

/// Literalizes every retained sentence concurrently, keeping input order.
pub fn literalize_all(
    retained: &[RetainedSentence],
    config: &LiteralizeConfig,
    registry: &AdapterRegistry,
) -> Result<(Vec<LiteralMetaphorPair>, YieldReport)> {
    let outcomes: Vec<Result<Option<LiteralMetaphorPair>>> = registry.install(|| {
        retained
            .par_iter()
            .map(|r| {
                let verb = r
                    .verb
                    .clone()
                    .ok_or_else(|| Error::invalid(format!("{}: retained sentence lacks its verb", r.id)))?;
                literalize(&r.sentence(), &verb, config, registry)
            })
            .collect()
    })?;
    let mut report = YieldReport {
        attempted: retained.len(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for (r, outcome) in retained.iter().zip(outcomes) {
        match outcome {
            Ok(Some(p)) => {
                report.literalized += 1;
                pairs.push(p);
            }
            Ok(None) => report.no_survivor += 1,
            Err(e) => {
                log::warn!("{}: literalization failed: {e}", r.id);
                report.errors += 1;
            }
        }
    }
    Ok((pairs, report))
}

/// Drops exact (literal, metaphor) repeats, keeping the first occurrence.
fn dedup_pairs(pairs: Vec<LiteralMetaphorPair>, report: &mut YieldReport) -> Vec<LiteralMetaphorPair> {
    let mut seen = HashSet::new();
    let before = pairs.len();
    let kept: Vec<_> = pairs
        .into_iter()
        .filter(|p| seen.insert((p.literal_text.clone(), p.metaphor_text.clone())))
        .collect();
    report.duplicates_removed = before - kept.len();
    kept
}

/// Turns each pair into a metaphor-infilling record: the source side is the
/// metaphor with its verb replaced by the mask slot, and `literal_verb`
/// becomes the mask token.
pub fn make_masked_variant(
    pairs: impl IntoIterator<Item = LiteralMetaphorPair>,
) -> Result<Vec<LiteralMetaphorPair>> {
    pairs
        .into_iter()
        .map(|p| {
            let masked = replace_token(&p.metaphor_text, p.verb_token_index, MASK_TOKEN)?;
            Ok(LiteralMetaphorPair {
                literal_text: masked,
                literal_verb: MASK_TOKEN.to_string(),
                ..p
            })
        })
        .collect()
}

/// Seeded shuffle, then the first `train_count` items go to train and the
/// next `valid_count` to valid. Counts larger than the supply are clamped.
pub fn split_pairs<T>(items: Vec<T>, train_count: usize, valid_count: usize, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut items = items;
    let n = items.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    let train_n = train_count.min(n);
    let valid_n = valid_count.min(n - train_n);
    if train_n < train_count || valid_n < valid_count {
        log::warn!(
            "only {n} pairs available; split clamped from ({train_count}, {valid_count}) to ({train_n}, {valid_n})"
        );
    }
    let mut rest = items.split_off(train_n);
    rest.truncate(valid_n);
    (items, rest)
}

/// Paths of the three artifacts under `dir`.
pub fn artifact_paths(dir: &Path) -> [PathBuf; 3] {
    [dir.join(TRAIN_FILE), dir.join(VALID_FILE), dir.join(REPORT_FILE)]
}
