use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use super::fake::{
    Fixture, FakeEmbedder, FakeMaskedPredictor, FakeSentenceScorer, FakeSeq2Seq, FakeSymbolizer,
    FakeVerbScorer,
};
use super::remote::RemoteAdapter;
use super::{AdapterRegistry, Slot};
use crate::error::{Error, Result};

/// Where a slot's implementation lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Fake(PathBuf),
    Remote(String),
}

impl BackendSpec {
    /// Parses `fake:<fixture-path>` or an `http(s)://` URI. Relative fixture
    /// paths are resolved against `base_dir`.
    pub fn parse(raw: &str, base_dir: &Path) -> Result<Self> {
        let raw = raw.trim();
        if let Some(path) = raw.strip_prefix("fake:") {
            let p = PathBuf::from(path);
            Ok(BackendSpec::Fake(if p.is_absolute() { p } else { base_dir.join(p) }))
        } else if raw.starts_with("http://") || raw.starts_with("https://") {
            Ok(BackendSpec::Remote(raw.to_string()))
        } else {
            Err(Error::InvalidConfig(format!(
                "backend `{raw}` is neither `fake:<path>` nor an http(s) URI"
            )))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_timeout_ms")]
    timeout_ms: u64,
    #[serde(default = "default_remote_concurrency")]
    max_concurrency: usize,
    slots: BTreeMap<String, String>,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_remote_concurrency() -> usize {
    8
}

/// Slot → backend mapping, read from TOML:
///
/// ```toml
/// timeout_ms = 30000
/// max_concurrency = 8
///
/// [slots]
/// masked_predictor = "fake:fixtures/demo.json"
/// symbolizer = "http://127.0.0.1:8600"
/// ```
///
/// `METAPHOR_<SLOT>` environment variables (e.g. `METAPHOR_SYMBOLIZER`)
/// override individual slots.
#[derive(Debug, Clone)]
pub struct AdapterConfig {
    pub slots: BTreeMap<Slot, BackendSpec>,
    pub timeout: Duration,
    pub max_concurrency: usize,
}

impl AdapterConfig {
    /// Every slot pointed at one fixture file.
    pub fn all_fake(fixture: impl Into<PathBuf>) -> Self {
        let path = fixture.into();
        AdapterConfig {
            slots: Slot::ALL
                .iter()
                .map(|s| (*s, BackendSpec::Fake(path.clone())))
                .collect(),
            timeout: Duration::from_millis(default_timeout_ms()),
            max_concurrency: default_remote_concurrency(),
        }
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("adapter config: {e}")))?;
        let mut slots = BTreeMap::new();
        for (name, spec) in &raw.slots {
            let slot = Slot::ALL
                .iter()
                .find(|s| s.name() == name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown adapter slot `{name}`")))?;
            slots.insert(*slot, BackendSpec::parse(spec, base_dir)?);
        }
        Ok(AdapterConfig {
            slots,
            timeout: Duration::from_millis(raw.timeout_ms),
            max_concurrency: raw.max_concurrency,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut cfg = AdapterConfig::from_toml(&text, base)?;
        cfg.apply_env(std::env::vars(), Path::new("."))?;
        Ok(cfg)
    }

    /// Applies `METAPHOR_<SLOT>` overrides from `vars`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>, cwd: &Path) -> Result<()> {
        for (k, v) in vars {
            let Some(name) = k.strip_prefix("METAPHOR_") else { continue };
            let name = name.to_lowercase();
            if let Some(slot) = Slot::ALL.iter().find(|s| s.name() == name) {
                self.slots.insert(*slot, BackendSpec::parse(&v, cwd)?);
            }
        }
        Ok(())
    }

    pub(crate) fn build_registry(&self) -> Result<AdapterRegistry> {
        let mut fixtures: HashMap<PathBuf, Arc<Fixture>> = HashMap::new();
        let mut fixture = |p: &PathBuf| -> Result<Arc<Fixture>> {
            if let Some(f) = fixtures.get(p) {
                return Ok(f.clone());
            }
            let f = Arc::new(Fixture::load(p)?);
            fixtures.insert(p.clone(), f.clone());
            Ok(f)
        };
        let remote = |slot, uri: &str| Arc::new(RemoteAdapter::new(slot, uri, self.max_concurrency, self.timeout));

        let mut builder = AdapterRegistry::builder();
        for slot in Slot::ALL {
            let Some(spec) = self.slots.get(&slot) else { continue };
            builder = match (slot, spec) {
                (Slot::MaskedPredictor, BackendSpec::Fake(p)) => {
                    builder.masked_predictor(Arc::new(FakeMaskedPredictor::new(fixture(p)?)))
                }
                (Slot::VerbScorer, BackendSpec::Fake(p)) => {
                    builder.verb_scorer(Arc::new(FakeVerbScorer::new(fixture(p)?)))
                }
                (Slot::SentenceScorer, BackendSpec::Fake(p)) => {
                    builder.sentence_scorer(Arc::new(FakeSentenceScorer::new(fixture(p)?)))
                }
                (Slot::Symbolizer, BackendSpec::Fake(p)) => {
                    builder.symbolizer(Arc::new(FakeSymbolizer::new(fixture(p)?)))
                }
                (Slot::Embedder, BackendSpec::Fake(p)) => {
                    builder.embedder(Arc::new(FakeEmbedder::new(fixture(p)?)))
                }
                (Slot::Seq2Seq, BackendSpec::Fake(p)) => builder.seq2seq(Arc::new(FakeSeq2Seq::new(fixture(p)?))),
                (Slot::MaskedPredictor, BackendSpec::Remote(u)) => builder.masked_predictor(remote(slot, u)),
                (Slot::VerbScorer, BackendSpec::Remote(u)) => builder.verb_scorer(remote(slot, u)),
                (Slot::SentenceScorer, BackendSpec::Remote(u)) => builder.sentence_scorer(remote(slot, u)),
                (Slot::Symbolizer, BackendSpec::Remote(u)) => builder.symbolizer(remote(slot, u)),
                (Slot::Embedder, BackendSpec::Remote(u)) => builder.embedder(remote(slot, u)),
                (Slot::Seq2Seq, BackendSpec::Remote(u)) => builder.seq2seq(remote(slot, u)),
            };
        }
        builder.build()
    }
}
