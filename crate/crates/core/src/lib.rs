//! Retrieval-augmented question answering over a crawled domain corpus.
//!
//! The crate covers the whole offline and online path:
//!
//! - [`crawl`]: breadth-first web crawling, scholarly paper retrieval and the
//!   raw corpus layout on disk.
//! - [`extract`]: HTML/PDF to clean text plus the relevance and quality filters.
//! - [`chunk`]: fixed-size word chunks, the unit of annotation and retrieval.
//! - [`provider`]: embedding, reranking and generation behind one wire protocol,
//!   with deterministic offline mocks.
//! - [`annotate`]: QA dataset generation, parsing, splitting and Cohen's kappa.
//! - [`retrieval`]: the persisted vector index, cosine top-k, MMR and reranking.
//! - [`generation`]: prompt rendering and the answer chain (with and without context).
//! - [`eval`]: token P/R/F1, answer cosine, BLEU and the sampled-run protocol.
//! - [`stats`]: corpus statistics.

pub mod annotate;
pub mod chunk;
pub mod crawl;
pub mod error;
pub mod eval;
pub mod extract;
pub mod generation;
pub mod jsonl;
pub mod provider;
pub mod retrieval;
pub mod stats;

pub use error::{Error, Result};
