//! Conceptual news browsing: formal concept extraction over sentence ×
//! keyword contexts, arranged into a heap-ordered keyword tree.
//!
//! The pipeline runs ingestion ([`ingest`]) → preprocessing and indexing
//! ([`text`]) → optimal concept coverage ([`relation`]) → labeling and heap
//! layout ([`tree`]), and [`snapshot`] packages the result for serving.
//!
//! With the default `parallel` feature, coverage and per-article
//! preprocessing run on rayon; without it the same results are computed
//! sequentially.

pub mod error;
pub mod ingest;
pub mod oracle;
pub mod relation;
pub mod snapshot;
pub mod text;
pub mod tree;

pub use error::{Error, Result};
