//! Literal/metaphor parallel corpus construction, discriminator-reranked
//! metaphor generation, evaluation metrics and quatrain enhancement.
//!
//! Model-backed steps go through the adapter traits in [`adapters`]; the
//! bundled fakes make every pipeline reproducible offline.

pub mod adapters;
pub mod corpus;
pub mod detector;
pub mod enhancer;
pub mod error;
pub mod evaluator;
pub mod generator;
pub mod lexicon;
pub mod literalizer;
pub mod pipeline;
pub mod text;
pub mod types;

pub use error::{Error, Result};
