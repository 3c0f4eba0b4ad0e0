//! Persisted flat vector index, similarity search, MMR diversification and
//! cross-encoder reranking.

mod index;
mod search;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chunk::Chunk;
use crate::provider::{Embedder, Reranker};
use crate::{Error, Result};

pub use index::{build_index, VectorIndex, INDEX_MAGIC, INDEX_VERSION};
pub use search::{cosine, cosine_sim, mmr_select, top_k, Candidate, Hit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub text: String,
    pub source_path: String,
    pub sim_score: f64,
    pub rerank_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalParams {
    /// Candidates handed to the reranker.
    pub fetch_k: usize,
    /// Results returned.
    pub final_k: usize,
    pub lambda: f64,
    pub rerank: bool,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            fetch_k: 10,
            final_k: 5,
            lambda: 0.5,
            rerank: true,
        }
    }
}

impl RetrievalParams {
    pub fn validate(&self) -> Result<()> {
        if self.fetch_k < 1 || self.final_k < 1 {
            return Err(Error::InvalidInput("fetch_k and final_k must be at least 1".into()));
        }
        if self.final_k > self.fetch_k {
            return Err(Error::InvalidInput(format!(
                "final_k ({}) cannot exceed fetch_k ({})",
                self.final_k, self.fetch_k
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub results: Vec<ScoredChunk>,
    /// Reranking was requested but failed; results are in MMR order.
    pub rerank_degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rerank_error: Option<String>,
}

/// An index together with the chunk texts it was built from.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    index: VectorIndex,
    chunks: Vec<Chunk>,
}

impl KnowledgeBase {
    /// Every indexed chunk_id must be present in `chunks`; extra chunks are ignored.
    pub fn new(index: VectorIndex, chunks: Vec<Chunk>) -> Result<Self> {
        let mut by_id: HashMap<String, Chunk> = chunks.into_iter().map(|c| (c.chunk_id.clone(), c)).collect();
        let aligned = index
            .chunk_ids()
            .iter()
            .map(|id| {
                by_id
                    .remove(id)
                    .ok_or_else(|| Error::InvalidInput(format!("indexed chunk {id} missing from chunk store")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { index, chunks: aligned })
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn scored(&self, hit: Hit) -> ScoredChunk {
        let c = &self.chunks[hit.position];
        ScoredChunk {
            chunk_id: c.chunk_id.clone(),
            text: c.text.clone(),
            source_path: c.source_path.clone(),
            sim_score: hit.sim,
            rerank_score: None,
        }
    }

    /// Cosine pool of `2 * fetch_k`, MMR down to `fetch_k`, rerank, keep `final_k`.
    pub async fn retrieve(
        &self,
        question: &str,
        embedder: &dyn Embedder,
        reranker: Option<&dyn Reranker>,
        params: RetrievalParams,
    ) -> Result<Retrieval> {
        params.validate()?;
        if question.trim().is_empty() {
            return Err(Error::InvalidInput("question is empty".into()));
        }
        if self.is_empty() {
            return Err(Error::Empty("index"));
        }
        if embedder.model_id() != self.index.model_id() {
            tracing::warn!(
                index_model = self.index.model_id(),
                query_model = embedder.model_id(),
                "query embedder differs from the index embedder"
            );
        }
        let query = embedder.embed_one(question).await?;
        let pool = top_k(&self.index, &query, params.fetch_k.saturating_mul(2))?;
        let candidates: Vec<Candidate<'_>> = pool
            .iter()
            .map(|h| Candidate {
                chunk_id: self.index.chunk_id(h.position),
                vector: self.index.vector(h.position),
                sim: h.sim,
            })
            .collect();
        let picked = mmr_select(&candidates, params.lambda, params.fetch_k)?;
        let mut results: Vec<ScoredChunk> = picked.into_iter().map(|i| self.scored(pool[i])).collect();

        let mut out = Retrieval {
            results: Vec::new(),
            rerank_degraded: false,
            rerank_error: None,
        };
        if let Some(reranker) = reranker.filter(|_| params.rerank) {
            let texts: Vec<String> = results.iter().map(|r| r.text.clone()).collect();
            match reranker.score_pairs(question, &texts).await {
                Ok(scores) if scores.len() == results.len() => {
                    for (r, s) in results.iter_mut().zip(scores) {
                        r.rerank_score = Some(s.0);
                    }
                    results.sort_by(|a, b| b.rerank_score.unwrap().total_cmp(&a.rerank_score.unwrap()));
                }
                Ok(scores) => {
                    out.rerank_degraded = true;
                    out.rerank_error = Some(format!("{} scores for {} candidates", scores.len(), results.len()));
                }
                Err(e) => {
                    tracing::warn!(error = %e, "reranker unavailable, keeping MMR order");
                    out.rerank_degraded = true;
                    out.rerank_error = Some(e.to_string());
                }
            }
        }
        results.truncate(params.final_k);
        out.results = results;
        Ok(out)
    }
}
