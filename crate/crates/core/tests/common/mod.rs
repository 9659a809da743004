#![allow(dead_code)]

pub mod oracle;
pub mod synth;

use std::path::PathBuf;

use metaphor_core::adapters::fake::Fixture;
use metaphor_core::adapters::{AdapterConfig, AdapterRegistry};
use metaphor_core::text::extract_verbs;
use metaphor_core::types::{Sentence, VerbOccurrence};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn demo_registry() -> AdapterRegistry {
    AdapterRegistry::from_fixture(Fixture::load(fixture("demo.json")).unwrap())
}

pub fn config_registry() -> AdapterRegistry {
    AdapterRegistry::from_config(&AdapterConfig::from_toml(
        &std::fs::read_to_string(fixture("adapters.toml")).unwrap(),
        &fixtures_dir(),
    )
    .unwrap())
    .unwrap()
}

pub fn registry_from_json(json: &str) -> AdapterRegistry {
    AdapterRegistry::from_fixture(Fixture::from_json(json).unwrap())
}

pub fn verb(sentence: &Sentence, surface: &str, registry: &AdapterRegistry) -> VerbOccurrence {
    extract_verbs(sentence, &*registry.tagger)
        .unwrap()
        .into_iter()
        .find(|v| v.surface == surface)
        .unwrap_or_else(|| panic!("no verb `{surface}` in `{}`", sentence.text))
}

pub fn read_lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}
