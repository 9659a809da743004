//! Acceptance suite for the workspace; see `tests/acceptance.rs`.
//!
//! Run with `cargo test -p metaphor-acceptance --test acceptance`.
