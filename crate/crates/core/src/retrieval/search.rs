use std::cmp::Ordering;

use super::VectorIndex;
use crate::provider::EmbeddingVector;
use crate::{Error, Result};

/// Cosine similarity in f64, clamped to [-1, 1].
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine of a zero vector".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine_sim(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    cosine(a.values(), b.values())
}

/// An index position with its similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub position: usize,
    pub sim: f64,
}

/// Descending score, then ascending chunk_id.
fn rank(a: (f64, &str), b: (f64, &str)) -> Ordering {
    // + 0.0 folds -0.0 into 0.0 so signed zeros tie
    (b.0 + 0.0).total_cmp(&(a.0 + 0.0)).then_with(|| a.1.cmp(b.1))
}

/// The `k` most similar entries, best first; ties go to the smaller chunk_id.
pub fn top_k(index: &VectorIndex, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if query.dim() != index.dim() {
        return Err(Error::InvalidInput(format!(
            "query dim {} does not match index dim {}",
            query.dim(),
            index.dim()
        )));
    }
    let mut hits = (0..index.len())
        .map(|i| {
            Ok(Hit {
                position: i,
                sim: cosine(index.vector(i), query.values())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    hits.sort_by(|a, b| rank((a.sim, index.chunk_id(a.position)), (b.sim, index.chunk_id(b.position))));
    hits.truncate(k);
    Ok(hits)
}

/// MMR input: an item with its vector and its similarity to the query.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub chunk_id: &'a str,
    pub vector: &'a [f32],
    pub sim: f64,
}

/// Greedy maximal marginal relevance. The first pick maximizes `sim`; each
/// later pick maximizes `lambda * sim - (1 - lambda) * max cos(d, selected)`.
/// Ties go to the smaller chunk_id. Returns positions into `candidates`.
pub fn mmr_select(candidates: &[Candidate<'_>], lambda: f64, k: usize) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("lambda must be in [0, 1], got {lambda}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let n = candidates.len();
    let mut selected: Vec<usize> = Vec::with_capacity(k.min(n));
    let mut max_redundancy = vec![f64::NEG_INFINITY; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    while selected.len() < k && !remaining.is_empty() {
        let score = |i: usize| {
            if selected.is_empty() {
                candidates[i].sim
            } else {
                lambda * candidates[i].sim - (1.0 - lambda) * max_redundancy[i]
            }
        };
        let (slot, &best) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| rank((score(a), candidates[a].chunk_id), (score(b), candidates[b].chunk_id)))
            .expect("remaining is non-empty");
        remaining.swap_remove(slot);
        selected.push(best);
        for &i in &remaining {
            let s = cosine(candidates[i].vector, candidates[best].vector)?;
            max_redundancy[i] = max_redundancy[i].max(s);
        }
    }
    Ok(selected)
}
