//! Fixed-size word chunks.
//!
//! A word is a maximal run of non-whitespace. Chunk `i` holds words
//! `[i * size, min((i + 1) * size, n))`, joined by single spaces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::extract::CleanDocument;
use crate::{jsonl, Error, Result};

pub const DEFAULT_CHUNK_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// `<doc_id>#<index>`
    pub chunk_id: String,
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub word_count: usize,
    /// Raw file the parent document was extracted from.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_path: String,
}

impl Chunk {
    pub fn make_id(doc_id: &str, index: usize) -> String {
        format!("{doc_id}#{index}")
    }
}

pub fn chunk_text(doc_id: &str, text: &str, chunk_size: usize) -> Result<Vec<Chunk>> {
    if chunk_size == 0 {
        return Err(Error::InvalidInput("chunk size must be at least 1".into()));
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    Ok(words
        .chunks(chunk_size)
        .enumerate()
        .map(|(index, w)| Chunk {
            chunk_id: Chunk::make_id(doc_id, index),
            doc_id: doc_id.to_owned(),
            index,
            text: w.join(" "),
            word_count: w.len(),
            source_path: String::new(),
        })
        .collect())
}

/// Empty documents produce no chunks (with a warning).
pub fn chunk_document(doc: &CleanDocument, chunk_size: usize) -> Result<Vec<Chunk>> {
    let mut chunks = chunk_text(&doc.doc_id, &doc.text, chunk_size)?;
    if chunks.is_empty() {
        tracing::warn!(doc_id = %doc.doc_id, "document has no words, no chunks produced");
    }
    for c in &mut chunks {
        c.source_path = doc.source_path.clone();
    }
    Ok(chunks)
}

/// Chunks every document in order; fails on duplicate chunk ids.
pub fn chunk_corpus(docs: &[CleanDocument], chunk_size: usize) -> Result<Vec<Chunk>> {
    let mut out = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for d in docs {
        for c in chunk_document(d, chunk_size)? {
            if !ids.insert(c.chunk_id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate chunk id {}", c.chunk_id)));
            }
            out.push(c);
        }
    }
    Ok(out)
}

pub fn read_chunks(path: &Path) -> Result<Vec<Chunk>> {
    jsonl::read(path)
}

pub fn write_chunks(path: &Path, chunks: &[Chunk]) -> Result<()> {
    jsonl::write(path, chunks)
}
