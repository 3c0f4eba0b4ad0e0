use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::provider::{Embedder, ProviderError};
use crate::retrieval::cosine_sim;
use crate::{Error, Result};

pub const DEFAULT_BLEU_ORDER: usize = 4;

fn is_trim_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{2013}' | '\u{2014}' | '\u{2026}' | '\u{00ab}' | '\u{00bb}'
        )
}

/// Lowercased whitespace tokens with surrounding punctuation removed.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(is_trim_char).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn counts<T: std::hash::Hash + Eq>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 over token multisets.
pub fn token_prf(prediction: &str, gold: &str) -> TokenPrf {
    let pred = normalize_tokens(prediction);
    let gold = normalize_tokens(gold);
    let gold_counts = counts(gold.iter());
    let tp: usize = counts(pred.iter())
        .iter()
        .map(|(t, &c)| c.min(gold_counts.get(t).copied().unwrap_or(0)))
        .sum();
    let precision = if pred.is_empty() { 0.0 } else { tp as f64 / pred.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { tp as f64 / gold.len() as f64 };
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (pred.len() + gold.len()) as f64 };
    TokenPrf { precision, recall, f1 }
}

/// Sentence BLEU against one reference with uniform weights and the
/// brevity penalty; any zero n-gram precision yields 0.
pub fn bleu(prediction: &str, reference: &str, max_n: usize) -> Result<f64> {
    if max_n == 0 {
        return Err(Error::InvalidInput("BLEU order must be at least 1".into()));
    }
    let cand = normalize_tokens(prediction);
    let refr = normalize_tokens(reference);
    if cand.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if cand.len() < n {
            return Ok(0.0);
        }
        let cand_counts = counts(cand.windows(n));
        let ref_counts = counts(refr.windows(n));
        let clipped: usize = cand_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        let total = cand.len() + 1 - n;
        log_sum += (clipped as f64 / total as f64).ln() / max_n as f64;
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((bp * log_sum.exp()).clamp(0.0, 1.0))
}

/// Embedding cosine of two answers, floored at 0.
pub async fn answer_cosine(prediction: &str, gold: &str, embedder: &dyn Embedder) -> std::result::Result<f64, ProviderError> {
    if prediction.trim().is_empty() || gold.trim().is_empty() {
        return Ok(0.0);
    }
    let v = embedder.embed_batch(&[prediction.to_owned(), gold.to_owned()]).await?;
    let [a, b] = v.as_slice() else {
        return Err(ProviderError::BadResponse {
            endpoint: embedder.describe(),
            message: format!("{} vectors for 2 texts", v.len()),
        });
    };
    let sim = cosine_sim(a, b).map_err(|e| ProviderError::BadResponse {
        endpoint: embedder.describe(),
        message: e.to_string(),
    })?;
    Ok(sim.clamp(0.0, 1.0))
}
