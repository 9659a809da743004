use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metaphor_core::adapters::{AdapterConfig, AdapterRegistry};
use metaphor_core::corpus::read_pairs;
use metaphor_core::detector::{default_stop_verbs, most_literal_verb, DetectorConfig, DEFAULT_THRESHOLD};
use metaphor_core::enhancer::enhance_poem;
use metaphor_core::evaluator::{evaluate_system, lexrep_generate, meta_m_generate};
use metaphor_core::generator::{
    finetune, generate_candidates, tune_lambda, CommandBackend, DryRunBackend, RescoringConfig, TrainerBackend,
    TrainingConfig, DEFAULT_HYPOTHESES, DEFAULT_K, DEFAULT_LAMBDA, DEFAULT_LAMBDA_GRID,
};
use metaphor_core::literalizer::LiteralizeConfig;
use metaphor_core::pipeline::{build_dataset, DatasetVariant, PipelineConfig, DEFAULT_TRAIN_COUNT, DEFAULT_VALID_COUNT};
use metaphor_core::types::{Sentence, SentenceSource};
use metaphor_service::ServiceConfig;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] metaphor_core::Error),
    #[error(transparent)]
    Service(#[from] metaphor_service::ServiceError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "metaphor", version, about = "Metaphor corpus building, generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect, literalize, dedup and split a poetry corpus into train/valid pairs.
    BuildCorpus(BuildCorpus),
    /// Rewrite literal sentences metaphorically.
    Generate(Generate),
    /// Run a lexical-replacement or metaphor-masking baseline.
    Baseline(Baseline),
    /// Score system outputs: similarity, BLEU-2 and embedding F1.
    Evaluate(Evaluate),
    /// Rewrite the most literal verb of every quatrain of a poem.
    Enhance(Enhance),
    /// Grid-search the discriminator weight on validation pairs.
    TuneLambda(TuneLambda),
    /// Hand a dataset to a training backend and record the run manifest.
    Finetune(Finetune),
    /// Start the HTTP service.
    Serve(Serve),
}

#[derive(Args)]
struct AdapterArgs {
    /// Adapter configuration file.
    #[arg(long, default_value = "adapters.toml")]
    adapters: PathBuf,
}

impl AdapterArgs {
    fn registry(&self) -> Result<AdapterRegistry> {
        Ok(AdapterRegistry::from_config(&AdapterConfig::load(&self.adapters)?)?)
    }
}

#[derive(Args)]
struct Decoding {
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_HYPOTHESES)]
    hypotheses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Decoding {
    fn config(&self) -> Result<RescoringConfig> {
        let cfg = RescoringConfig {
            lambda: self.lambda,
            k: self.k,
            num_hypotheses: self.hypotheses,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Pairs,
    Masked,
}

#[derive(Args)]
struct BuildCorpus {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 200)]
    candidates: usize,
    #[arg(long, default_value_t = 5)]
    overlap: usize,
    #[arg(long, default_value_t = DEFAULT_TRAIN_COUNT)]
    train: usize,
    #[arg(long, default_value_t = DEFAULT_VALID_COUNT)]
    valid: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "pairs")]
    variant: Variant,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Args)]
struct Generate {
    /// A single literal sentence.
    #[arg(long, conflicts_with = "input")]
    text: Option<String>,
    /// File with one literal sentence per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Emit one JSON record per input with every ranked candidate.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    decoding: Decoding,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineSystem {
    Lexrep,
    MetaM,
}

#[derive(Args)]
struct Baseline {
    #[arg(long, value_enum)]
    system: BaselineSystem,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    decoding: Decoding,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Args)]
struct Evaluate {
    /// Literal inputs, one per line.
    #[arg(long)]
    inputs: PathBuf,
    /// System outputs aligned with the inputs.
    #[arg(long)]
    outputs: PathBuf,
    /// Reference file aligned with the inputs; repeat for multiple references.
    #[arg(long, required = true)]
    references: Vec<PathBuf>,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Args)]
struct Enhance {
    #[arg(long)]
    poem: PathBuf,
    #[command(flatten)]
    decoding: Decoding,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Args)]
struct TuneLambda {
    /// Validation pairs (JSONL).
    #[arg(long)]
    valid: PathBuf,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Use only the first N validation pairs.
    #[arg(long)]
    limit: Option<usize>,
    #[command(flatten)]
    decoding: Decoding,
    #[command(flatten)]
    adapters: AdapterArgs,
}

#[derive(Args)]
struct Finetune {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long, default_value_t = 70)]
    epochs: u32,
    #[arg(long, default_value_t = 1024)]
    max_tokens: u32,
    #[arg(long)]
    run_dir: PathBuf,
    /// Training program; without it the run is recorded as a dry run.
    #[arg(long)]
    command: Option<PathBuf>,
    /// Extra arguments passed to the training program.
    #[arg(last = true)]
    args: Vec<String>,
}

#[derive(Args)]
struct Serve {
    /// Service configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    adapters: Option<PathBuf>,
    #[arg(long)]
    log_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<()> {
    match command {
        Command::BuildCorpus(c) => build_corpus(c, out),
        Command::Generate(c) => generate(c, out),
        Command::Baseline(c) => baseline(c, out),
        Command::Evaluate(c) => evaluate(c, out),
        Command::Enhance(c) => enhance(c, out),
        Command::TuneLambda(c) => tune(c, out),
        Command::Finetune(c) => train(c, out),
        Command::Serve(c) => serve(c),
    }
}

fn print_json(value: &impl Serialize, out: &mut impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(file).lines().collect::<io::Result<_>>()?)
}

fn build_corpus(c: BuildCorpus, out: &mut impl Write) -> Result<()> {
    let registry = c.adapters.registry()?;
    let config = PipelineConfig {
        detector: DetectorConfig::new(c.threshold)?,
        literalize: LiteralizeConfig {
            n_candidates: c.candidates,
            required_overlap: c.overlap,
            ..Default::default()
        },
        train_count: c.train,
        valid_count: c.valid,
        variant: match c.variant {
            Variant::Pairs => DatasetVariant::Pairs,
            Variant::Masked => DatasetVariant::MetaphorMasked,
        },
        ..PipelineConfig::new(c.input, c.out, c.seed)
    };
    let output = build_dataset(&config, &registry)?;
    print_json(&output.report, out)
}

#[derive(Serialize)]
struct GeneratedCandidate<'a> {
    text: &'a str,
    nll: f64,
    disc: f64,
    combined: f64,
}

#[derive(Serialize)]
struct GeneratedRecord<'a> {
    input: &'a str,
    output: Option<&'a str>,
    error: Option<String>,
    candidates: Vec<GeneratedCandidate<'a>>,
}

fn generate(c: Generate, out: &mut impl Write) -> Result<()> {
    let lines = match (&c.text, &c.input) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(p)) => read_lines(p)?,
        _ => return Err(CliError::Usage("pass exactly one of --text or --input".into())),
    };
    let registry = c.adapters.registry()?;
    let cfg = c.decoding.config()?;
    for (i, line) in lines.iter().enumerate() {
        let ranked = Sentence::new(format!("input-{}", i + 1), line.as_str(), SentenceSource::User)
            .and_then(|s| generate_candidates(&s, &cfg, &registry));
        if c.json {
            let (candidates, error) = match &ranked {
                Ok(r) => (
                    r.iter()
                        .map(|h| GeneratedCandidate {
                            text: &h.text,
                            nll: h.nll(),
                            disc: h.disc(),
                            combined: h.combined(),
                        })
                        .collect(),
                    None,
                ),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            let record = GeneratedRecord {
                input: line,
                output: candidates.first().map(|c| c.text),
                error,
                candidates,
            };
            serde_json::to_writer(&mut *out, &record)?;
            writeln!(out)?;
        } else {
            match &ranked {
                Ok(r) => writeln!(out, "{}", r[0].text)?,
                Err(e) => {
                    log::warn!("line {}: {e}; echoing the input", i + 1);
                    writeln!(out, "{line}")?;
                }
            }
        }
    }
    Ok(())
}

fn baseline(c: Baseline, out: &mut impl Write) -> Result<()> {
    let registry = c.adapters.registry()?;
    let cfg = c.decoding.config()?;
    let stop = default_stop_verbs();
    for (i, line) in read_lines(&c.input)?.iter().enumerate() {
        let result = (|| -> metaphor_core::Result<String> {
            let s = Sentence::new(format!("input-{}", i + 1), line.as_str(), SentenceSource::TestSet)?;
            let Some((verb, _)) = most_literal_verb(&s, &registry, &stop)? else {
                return Ok(line.clone());
            };
            match c.system {
                BaselineSystem::Lexrep => Ok(lexrep_generate(&s, &verb, &registry)?.text),
                BaselineSystem::MetaM => meta_m_generate(&s, &verb, &cfg, &registry),
            }
        })();
        match result {
            Ok(text) => writeln!(out, "{text}")?,
            Err(e) => {
                log::warn!("line {}: {e}; echoing the input", i + 1);
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

fn evaluate(c: Evaluate, out: &mut impl Write) -> Result<()> {
    let inputs = read_lines(&c.inputs)?;
    let outputs = read_lines(&c.outputs)?;
    let ref_files: Vec<Vec<String>> = c.references.iter().map(|p| read_lines(p)).collect::<Result<_>>()?;
    if let Some(f) = ref_files.iter().position(|r| r.len() != inputs.len()) {
        return Err(CliError::Usage(format!(
            "{} has {} lines but there are {} inputs",
            c.references[f].display(),
            ref_files[f].len(),
            inputs.len()
        )));
    }
    let references: Vec<Vec<String>> = (0..inputs.len())
        .map(|i| ref_files.iter().map(|r| r[i].clone()).collect())
        .collect();
    let registry = c.adapters.registry()?;
    let report = evaluate_system(&inputs, &outputs, &references, &registry)?;
    print_json(&report, out)
}

fn enhance(c: Enhance, out: &mut impl Write) -> Result<()> {
    let poem = read_lines(&c.poem)?;
    let registry = c.adapters.registry()?;
    let id = c.poem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let result = enhance_poem(&poem, &id, &c.decoding.config()?, &registry)?;
    print_json(&result, out)
}

fn tune(c: TuneLambda, out: &mut impl Write) -> Result<()> {
    let mut pairs = read_pairs(&c.valid)?.collect::<metaphor_core::Result<Vec<_>>>()?;
    if let Some(n) = c.limit {
        pairs.truncate(n);
    }
    let grid = c.grid.unwrap_or_else(|| DEFAULT_LAMBDA_GRID.to_vec());
    let registry = c.adapters.registry()?;
    let report = tune_lambda(&pairs, &grid, &c.decoding.config()?, &registry)?;
    print_json(&report, out)
}

fn train(c: Finetune, out: &mut impl Write) -> Result<()> {
    let config = TrainingConfig {
        epochs: c.epochs,
        max_tokens_per_batch: c.max_tokens,
        ..TrainingConfig::new(c.train, c.valid)
    };
    let backend: Box<dyn TrainerBackend> = match c.command {
        Some(program) => Box::new(CommandBackend { program, args: c.args }),
        None => Box::new(DryRunBackend),
    };
    let handle = finetune(&config, backend.as_ref(), &c.run_dir)?;
    print_json(&handle, out)
}

fn serve(c: Serve) -> Result<()> {
    let mut config = ServiceConfig::load(c.config.as_deref())?;
    if let Some(p) = c.port {
        config.port = p;
    }
    if let Some(a) = c.adapters {
        config.adapters = a;
    }
    if let Some(d) = c.log_dir {
        config.log_dir = Some(d);
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(metaphor_service::serve(config))?;
    Ok(())
}
