//! Model roles (embedding, cross-encoder reranking, generation) behind one
//! JSON-over-HTTP protocol, plus deterministic mocks.
//!
//! Wire protocol, all `POST` with JSON bodies:
//!
//! | route       | request                                                        | response                         |
//! |-------------|----------------------------------------------------------------|----------------------------------|
//! | `/embed`    | `{"texts": [..]}`                                              | `{"vectors": [[..], ..], "dim": n}` |
//! | `/rerank`   | `{"query": "..", "documents": [..]}`                           | `{"scores": [..]}`               |
//! | `/generate` | `{"prompt": "..", "max_new_tokens": n, "temperature": t, "seed": s}` | `{"text": ".."}`           |
//!
//! `/generate` answers `413` when the prompt does not fit the model context.

mod http;
pub mod mock;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use url::Url;

pub use http::{HttpEmbedder, HttpGenerator, HttpReranker};
pub use mock::{mock_embed, mock_tokens, MockEmbedder, MockGenerator, MockReranker, MOCK_REFUSAL};

pub const EMBED_URL_ENV: &str = "RAG_EMBED_URL";
pub const RERANK_URL_ENV: &str = "RAG_RERANK_URL";
pub const GEN_URL_ENV: &str = "RAG_GEN_URL";

pub const DEFAULT_EMBED_MODEL: &str = "mixedbread-ai/mxbai-embed-large-v1";
pub const DEFAULT_RERANK_MODEL: &str = "BAAI/bge-reranker-large";
pub const DEFAULT_GEN_MODEL: &str = "meta-llama/Llama-2-7b-chat-hf";
pub const DEFAULT_EVAL_EMBED_MODEL: &str = "sentence-transformers/all-MiniLM-L6-v2";
pub const DEFAULT_MOCK_DIM: usize = 512;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error at {endpoint}: {message}")]
    Transport { endpoint: String, message: String },

    #[error("prompt does not fit the model context window, shrink the context ({0})")]
    ContextOverflow(String),

    #[error("provider configuration: {0}")]
    Config(String),

    #[error("invalid provider request: {0}")]
    InvalidRequest(String),

    #[error("unexpected response from {endpoint}: {message}")]
    BadResponse { endpoint: String, message: String },
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport { .. })
    }
}

/// Unit-normalized (after provider post-processing) embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// Wraps raw values without normalizing.
    pub fn new(values: Vec<f32>) -> Self {
        Self(values)
    }

    /// Scales to unit L2 norm; zero or non-finite vectors are rejected.
    pub fn normalized(values: Vec<f32>) -> Result<Self, ProviderError> {
        let norm = l2_norm(&values);
        if !norm.is_finite() || norm == 0.0 {
            return Err(ProviderError::InvalidRequest("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(values.iter().map(|&v| (v as f64 / norm) as f32).collect()))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }
}

fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// Higher means more relevant; only comparable within one call.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RerankScore(pub f64);

#[async_trait]
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;
    fn describe(&self) -> String;
    /// One unit vector per input text, in input order.
    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;

    async fn embed_one(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut v = self.embed_batch(&[text.to_owned()]).await?;
        v.pop()
            .ok_or_else(|| ProviderError::Config("embedder returned no vector".into()))
    }
}

#[async_trait]
pub trait Reranker: Send + Sync {
    fn model_id(&self) -> &str;
    fn describe(&self) -> String;
    /// One finite score per candidate, aligned with the input.
    async fn score_pairs(&self, query: &str, candidates: &[String]) -> Result<Vec<RerankScore>, ProviderError>;
}

#[async_trait]
pub trait Generator: Send + Sync {
    fn model_id(&self) -> &str;
    fn describe(&self) -> String;
    /// Completion text only; the prompt is not echoed.
    async fn generate(&self, prompt: &str) -> Result<String, ProviderError>;
}

pub(crate) fn check_texts(texts: &[String]) -> Result<(), ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::InvalidRequest("no texts to embed".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(ProviderError::InvalidRequest(format!("text {i} is empty")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Embedding,
    Rerank,
    Generation,
}

impl Role {
    pub fn env_var(self) -> &'static str {
        match self {
            Role::Embedding => EMBED_URL_ENV,
            Role::Rerank => RERANK_URL_ENV,
            Role::Generation => GEN_URL_ENV,
        }
    }

    pub fn default_model(self) -> &'static str {
        match self {
            Role::Embedding => DEFAULT_EMBED_MODEL,
            Role::Rerank => DEFAULT_RERANK_MODEL,
            Role::Generation => DEFAULT_GEN_MODEL,
        }
    }
}

/// `mock` / `mock:<seed>` select the offline mocks; anything else must be an
/// http(s) base URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Mock { seed: u64 },
    Http(Url),
}

impl Endpoint {
    pub fn parse(s: &str) -> Result<Self, ProviderError> {
        let s = s.trim();
        if s == "mock" {
            return Ok(Endpoint::Mock { seed: 0 });
        }
        if let Some(seed) = s.strip_prefix("mock:") {
            let seed = seed
                .parse()
                .map_err(|_| ProviderError::Config(format!("bad mock seed in {s:?}")))?;
            return Ok(Endpoint::Mock { seed });
        }
        let url = Url::parse(s).map_err(|e| ProviderError::Config(format!("bad endpoint {s:?}: {e}")))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(ProviderError::Config(format!("endpoint {s:?} is not http(s)")));
        }
        Ok(Endpoint::Http(url))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Mock { seed } => write!(f, "mock:{seed}"),
            Endpoint::Http(u) => write!(f, "{u}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub role: Role,
    pub endpoint: Endpoint,
    pub model_id: String,
    pub timeout: Duration,
    pub max_batch: usize,
    pub max_retries: u32,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
    /// Vector width of the mock embedder.
    pub mock_dim: usize,
}

impl ProviderConfig {
    pub fn new(role: Role, endpoint: Endpoint) -> Self {
        Self {
            role,
            endpoint,
            model_id: role.default_model().to_owned(),
            timeout: Duration::from_secs(60),
            max_batch: 32,
            max_retries: 3,
            max_new_tokens: 256,
            temperature: 0.0,
            seed: 0,
            mock_dim: DEFAULT_MOCK_DIM,
        }
    }

    pub fn mock(role: Role, seed: u64) -> Self {
        Self::new(role, Endpoint::Mock { seed })
    }

    /// Endpoint from the role's env var, or `None` when unset.
    pub fn from_env(role: Role) -> Result<Option<Self>, ProviderError> {
        match std::env::var(role.env_var()) {
            Ok(v) if !v.trim().is_empty() => Ok(Some(Self::new(role, Endpoint::parse(&v)?))),
            _ => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_batch < 1 {
            return Err(ProviderError::Config("max_batch must be at least 1".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProviderError::Config("temperature must be non-negative".into()));
        }
        if matches!(self.endpoint, Endpoint::Mock { .. }) && self.role == Role::Embedding && self.mock_dim < 8 {
            return Err(ProviderError::Config("mock embedding dim must be at least 8".into()));
        }
        Ok(())
    }

    fn expect_role(&self, role: Role) -> Result<(), ProviderError> {
        if self.role != role {
            return Err(ProviderError::Config(format!("config is for {:?}, not {role:?}", self.role)));
        }
        self.validate()
    }
}

pub fn build_embedder(cfg: &ProviderConfig) -> Result<Arc<dyn Embedder>, ProviderError> {
    cfg.expect_role(Role::Embedding)?;
    Ok(match &cfg.endpoint {
        Endpoint::Mock { seed } => Arc::new(MockEmbedder::new(cfg.mock_dim, *seed).with_model_id(&cfg.model_id)),
        Endpoint::Http(url) => Arc::new(HttpEmbedder::new(url.clone(), cfg)?),
    })
}

pub fn build_reranker(cfg: &ProviderConfig) -> Result<Arc<dyn Reranker>, ProviderError> {
    cfg.expect_role(Role::Rerank)?;
    Ok(match &cfg.endpoint {
        Endpoint::Mock { .. } => Arc::new(MockReranker::new().with_model_id(&cfg.model_id)),
        Endpoint::Http(url) => Arc::new(HttpReranker::new(url.clone(), cfg)?),
    })
}

pub fn build_generator(cfg: &ProviderConfig) -> Result<Arc<dyn Generator>, ProviderError> {
    cfg.expect_role(Role::Generation)?;
    Ok(match &cfg.endpoint {
        Endpoint::Mock { .. } => Arc::new(MockGenerator::new().with_model_id(&cfg.model_id)),
        Endpoint::Http(url) => Arc::new(HttpGenerator::new(url.clone(), cfg)?),
    })
}
