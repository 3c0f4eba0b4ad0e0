//! Offline providers. Every output is a pure function of the input (and the
//! seed), identical across runs and platforms.
//!
//! - embeddings: lowercase alphanumeric tokens hashed (FNV-1a, seeded) into
//!   `dim` buckets; the bucket-count histogram is L2-normalized.
//! - reranking: fraction of distinct query tokens present in the candidate.
//! - generation: for QA prompts, the context sentence sharing the most
//!   distinct tokens with the question (earliest wins ties), or
//!   [`MOCK_REFUSAL`] when the context is empty or shares nothing; for
//!   annotation prompts, a fenced JSON array with the requested number of
//!   pairs built from the passage sentences.

use async_trait::async_trait;
use std::collections::HashSet;

use super::{check_texts, Embedder, EmbeddingVector, Generator, ProviderError, RerankScore, Reranker};

pub const MOCK_REFUSAL: &str = "I don't know.";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, token: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Lowercased maximal alphanumeric runs.
pub fn mock_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Bucket a token falls into for the given width and seed.
pub fn mock_bucket(token: &str, dim: usize, seed: u64) -> usize {
    (fnv1a(seed, token) % dim as u64) as usize
}

/// Text with no alphanumeric tokens hashes as a single whole-string token,
/// so the histogram is never zero.
pub fn mock_embed(text: &str, dim: usize, seed: u64) -> EmbeddingVector {
    assert!(dim >= 8, "mock embedding dim must be at least 8");
    let mut tokens = mock_tokens(text);
    if tokens.is_empty() {
        tokens.push(text.trim().to_lowercase());
    }
    let mut hist = vec![0f32; dim];
    for t in &tokens {
        hist[mock_bucket(t, dim, seed)] += 1.0;
    }
    EmbeddingVector::normalized(hist).expect("histogram has at least one count")
}

#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
    seed: u64,
    model_id: String,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            model_id: "mock-embed".into(),
        }
    }

    pub fn with_model_id(mut self, id: &str) -> Self {
        self.model_id = id.to_owned();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[async_trait]
impl Embedder for MockEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn describe(&self) -> String {
        format!("mock:{} (dim {})", self.seed, self.dim)
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_texts(texts)?;
        Ok(texts.iter().map(|t| mock_embed(t, self.dim, self.seed)).collect())
    }
}

fn token_set(text: &str) -> HashSet<String> {
    mock_tokens(text).into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct MockReranker {
    model_id: String,
}

impl MockReranker {
    pub fn new() -> Self {
        Self {
            model_id: "mock-rerank".into(),
        }
    }

    pub fn with_model_id(mut self, id: &str) -> Self {
        self.model_id = id.to_owned();
        self
    }

    pub fn score(query: &str, candidate: &str) -> f64 {
        let q = token_set(query);
        if q.is_empty() {
            return 0.0;
        }
        let c = token_set(candidate);
        q.intersection(&c).count() as f64 / q.len() as f64
    }
}

impl Default for MockReranker {
    fn default() -> Self {
        Self::new()
    }
}

#[async_trait]
impl Reranker for MockReranker {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn describe(&self) -> String {
        "mock token-overlap reranker".into()
    }

    async fn score_pairs(&self, query: &str, candidates: &[String]) -> Result<Vec<RerankScore>, ProviderError> {
        if candidates.is_empty() {
            return Err(ProviderError::InvalidRequest("no candidates to score".into()));
        }
        Ok(candidates.iter().map(|c| RerankScore(Self::score(query, c))).collect())
    }
}

#[derive(Debug, Clone)]
pub struct MockGenerator {
    model_id: String,
}

impl MockGenerator {
    pub fn new() -> Self {
        Self {
            model_id: "mock-generate".into(),
        }
    }

    pub fn with_model_id(mut self, id: &str) -> Self {
        self.model_id = id.to_owned();
        self
    }

    pub fn complete(prompt: &str) -> String {
        if let Some((n, passage)) = annotation_request(prompt) {
            return canned_pairs(n, passage);
        }
        match qa_sections(prompt) {
            Some((question, context)) => extract_answer(question, context),
            None => MOCK_REFUSAL.to_owned(),
        }
    }
}

impl Default for MockGenerator {
    fn default() -> Self {
        Self::new()
    }
}

#[async_trait]
impl Generator for MockGenerator {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn describe(&self) -> String {
        "mock extractive generator".into()
    }

    async fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt".into()));
        }
        Ok(Self::complete(prompt))
    }
}

/// `(question, context)` from a prompt laid out as
/// `... Question: Q ... Context: C ... Answer: ...`.
fn qa_sections(prompt: &str) -> Option<(&str, &str)> {
    let q_start = prompt.find("Question:")? + "Question:".len();
    let rest = &prompt[q_start..];
    let c_rel = rest.find("Context:")?;
    let question = &rest[..c_rel];
    let after = &rest[c_rel + "Context:".len()..];
    let context = match after.rfind("Answer:") {
        Some(i) => &after[..i],
        None => after,
    };
    Some((question, context))
}

/// Sentences split at newlines and at `.`/`!`/`?` followed by whitespace.
pub(crate) fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut start = 0;
        let bytes = line.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            let boundary = matches!(b, b'.' | b'!' | b'?')
                && bytes.get(i + 1).is_some_and(|n| n.is_ascii_whitespace());
            if boundary {
                out.push(line[start..=i].trim());
                start = i + 1;
            }
        }
        out.push(line[start..].trim());
    }
    out.retain(|s| !s.is_empty());
    out
}

fn extract_answer(question: &str, context: &str) -> String {
    let q = token_set(question);
    let mut best: Option<(usize, &str)> = None;
    for s in sentences(context) {
        let overlap = token_set(s).intersection(&q).count();
        if overlap > best.map_or(0, |(o, _)| o) {
            best = Some((overlap, s));
        }
    }
    best.map_or_else(|| MOCK_REFUSAL.to_owned(), |(_, s)| s.to_owned())
}

/// `(num_qas, passage)` when the prompt is a QA-pair annotation request.
fn annotation_request(prompt: &str) -> Option<(usize, &str)> {
    if !prompt.contains("question and answer pairs") || !prompt.contains("### Response:") {
        return None;
    }
    let n = prompt.match_indices("come up with ").find_map(|(i, m)| {
        let digits: String = prompt[i + m.len()..].chars().take_while(char::is_ascii_digit).collect();
        digits.parse::<usize>().ok()
    })?;
    let sep = "----------------\n";
    let start = prompt.rfind(sep)? + sep.len();
    let end = prompt[start..].rfind("### Response:").map_or(prompt.len(), |i| start + i);
    Some((n, prompt[start..end].trim()))
}

fn canned_pairs(n: usize, passage: &str) -> String {
    let sents = sentences(passage);
    let pairs: Vec<serde_json::Value> = (1..=n)
        .map(|k| {
            let answer = if sents.is_empty() {
                "The passage is empty.".to_owned()
            } else {
                sents[(k - 1) % sents.len()].to_owned()
            };
            serde_json::json!({
                "question": format!("What does part {k} of the passage state?"),
                "answer": answer,
            })
        })
        .collect();
    let array = serde_json::to_string_pretty(&pairs).expect("json values serialize");
    format!("Here are the pairs:\n```\n{array}\n```")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::cosine_sim;

    fn collision_free(tokens: &[&str], dim: usize, seed: u64) -> bool {
        let buckets: HashSet<_> = tokens.iter().map(|t| mock_bucket(t, dim, seed)).collect();
        buckets.len() == tokens.len()
    }

    #[test]
    fn identical_texts_have_cosine_one() {
        let a = mock_embed("cat sat", 64, 3);
        assert_eq!(a, mock_embed("cat sat", 64, 3));
        assert!((cosine_sim(&a, &a).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_tokens_are_orthogonal() {
        assert!(collision_free(&["cat", "sat", "dog", "ran"], 512, 0));
        let a = mock_embed("cat sat", 512, 0);
        let b = mock_embed("dog ran", 512, 0);
        assert_eq!(cosine_sim(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap_gives_one_half() {
        // (1*1) / (sqrt(2) * sqrt(2)) with a, b, c in distinct buckets
        assert!(collision_free(&["a", "b", "c"], 512, 0));
        let got = cosine_sim(&mock_embed("a b", 512, 0), &mock_embed("a c", 512, 0)).unwrap();
        assert!((got - 0.5).abs() < 1e-6, "{got}");
    }

    #[test]
    fn tokenization_is_case_and_punctuation_blind() {
        assert_eq!(mock_tokens("Cat, SAT!"), ["cat", "sat"]);
        assert_eq!(mock_embed("Cat, SAT!", 64, 1), mock_embed("cat sat", 64, 1));
        assert!(mock_embed("!!!", 64, 1).is_unit());
    }

    #[test]
    fn seed_changes_buckets() {
        let same = (0..32).all(|s| mock_bucket("token", 512, s) == mock_bucket("token", 512, 0));
        assert!(!same);
    }

    #[tokio::test]
    async fn reranker_prefers_full_overlap() {
        let r = MockReranker::new();
        let s = r
            .score_pairs("fall classes begin", &["classes begin in fall".into(), "parking permits".into(), "parking permits".into()])
            .await
            .unwrap();
        assert_eq!(s[0].0, 1.0);
        assert_eq!(s[1].0, 0.0);
        assert_eq!(s[1], s[2]);
        assert!(r.score_pairs("q", &[]).await.is_err());
    }

    #[test]
    fn generator_extracts_best_sentence() {
        let prompt = "[INST] sys\nQuestion: When do fall classes begin? \nContext: Parking is limited. Fall classes begin on August 26.\n\nThe gym opens at 6. \nAnswer: [/INST]\n";
        assert_eq!(MockGenerator::complete(prompt), "Fall classes begin on August 26.");
    }

    #[test]
    fn generator_refuses_without_context() {
        let prompt = "Question: When do fall classes begin? \nContext:  \nAnswer: [/INST]";
        assert_eq!(MockGenerator::complete(prompt), MOCK_REFUSAL);
        assert_eq!(MockGenerator::complete("no markers at all"), MOCK_REFUSAL);
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(sentences("A b. C d? E\nF. 3.5 stays"), ["A b.", "C d?", "E", "F.", "3.5 stays"]);
    }
}
