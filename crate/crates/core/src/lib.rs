//! Unsupervised simplification of legal text.
//!
//! The pipeline identifies complex legal vocabulary from Zipf statistics of a
//! general and a legal corpus, replaces it with masked-language-model
//! candidates ranked by a weighted five-feature score, and then recursively
//! splits long sentences into core and context sentences.

pub mod benchmark;
pub mod candidates;
pub mod config;
pub mod cwi;
pub mod embeddings;
pub mod error;
pub mod frequency;
pub mod metrics;
pub mod optimize;
pub mod pipeline;
pub mod pos;
pub mod ranking;
pub mod split;
pub mod stats;
pub mod syllables;
pub mod text;

pub use error::{Error, Result};
