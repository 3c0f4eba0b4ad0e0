use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use url::Url;

use super::{check_texts, Embedder, EmbeddingVector, Generator, ProviderConfig, ProviderError, RerankScore, Reranker};

const BASE_BACKOFF: Duration = Duration::from_millis(200);

#[derive(Debug)]
struct Client {
    http: reqwest::Client,
    base: Url,
    model_id: String,
    max_retries: u32,
}

impl Client {
    fn new(base: Url, cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let http = reqwest::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ProviderError::Config(format!("http client: {e}")))?;
        Ok(Self {
            http,
            base,
            model_id: cfg.model_id.clone(),
            max_retries: cfg.max_retries,
        })
    }

    fn route(&self, name: &str) -> Result<Url, ProviderError> {
        let mut base = self.base.clone();
        if !base.path().ends_with('/') {
            let p = format!("{}/", base.path());
            base.set_path(&p);
        }
        base.join(name)
            .map_err(|e| ProviderError::Config(format!("bad route {name}: {e}")))
    }

    async fn post<Req: Serialize + Sync, Resp: DeserializeOwned>(
        &self,
        route: &str,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let url = self.route(route)?;
        let mut attempt = 0;
        loop {
            match self.post_once(&url, body).await {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    tracing::warn!(endpoint = %url, attempt, error = %e, "retrying provider call");
                    tokio::time::sleep(BASE_BACKOFF * 2u32.pow(attempt)).await;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    async fn post_once<Req: Serialize + Sync, Resp: DeserializeOwned>(
        &self,
        url: &Url,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let transport = |message: String| ProviderError::Transport {
            endpoint: url.to_string(),
            message,
        };
        let resp = self
            .http
            .post(url.clone())
            .json(body)
            .send()
            .await
            .map_err(|e| transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| transport(e.to_string()))?;
        if status.as_u16() == 413 {
            return Err(ProviderError::ContextOverflow(truncate(&text)));
        }
        if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
            return Err(transport(format!("status {status}: {}", truncate(&text))));
        }
        if !status.is_success() {
            return Err(ProviderError::BadResponse {
                endpoint: url.to_string(),
                message: format!("status {status}: {}", truncate(&text)),
            });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse {
            endpoint: url.to_string(),
            message: format!("{e}: {}", truncate(&text)),
        })
    }

    fn bad(&self, message: String) -> ProviderError {
        ProviderError::BadResponse {
            endpoint: self.base.to_string(),
            message,
        }
    }
}

fn truncate(s: &str) -> String {
    let mut out: String = s.chars().take(200).collect();
    if out.len() < s.len() {
        out.push_str("...");
    }
    out
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
    dim: Option<usize>,
}

#[derive(Debug)]
pub struct HttpEmbedder {
    client: Client,
    max_batch: usize,
    session_dim: Mutex<Option<usize>>,
}

impl HttpEmbedder {
    pub fn new(base: Url, cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: Client::new(base, cfg)?,
            max_batch: cfg.max_batch,
            session_dim: Mutex::new(None),
        })
    }

    fn check_dim(&self, dim: usize) -> Result<(), ProviderError> {
        let mut session = self.session_dim.lock().expect("dim lock poisoned");
        match *session {
            Some(d) if d != dim => Err(ProviderError::Config(format!(
                "embedding dimension changed within a session: {d} then {dim}"
            ))),
            _ => {
                *session = Some(dim);
                Ok(())
            }
        }
    }
}

#[async_trait]
impl Embedder for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.client.model_id
    }

    fn describe(&self) -> String {
        format!("{} at {}", self.client.model_id, self.client.base)
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_texts(texts)?;
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.max_batch) {
            let resp: EmbedResponse = self.client.post("embed", &EmbedRequest { texts: batch }).await?;
            if resp.vectors.len() != batch.len() {
                return Err(self.client.bad(format!(
                    "{} vectors for {} texts",
                    resp.vectors.len(),
                    batch.len()
                )));
            }
            for v in resp.vectors {
                if resp.dim.is_some_and(|d| d != v.len()) {
                    return Err(self.client.bad(format!("vector of length {} but dim {:?}", v.len(), resp.dim)));
                }
                self.check_dim(v.len())?;
                let v = EmbeddingVector::normalized(v).map_err(|e| self.client.bad(e.to_string()))?;
                out.push(v);
            }
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct RerankRequest<'a> {
    query: &'a str,
    documents: &'a [String],
}

#[derive(Deserialize)]
struct RerankResponse {
    scores: Vec<f64>,
}

#[derive(Debug)]
pub struct HttpReranker {
    client: Client,
}

impl HttpReranker {
    pub fn new(base: Url, cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: Client::new(base, cfg)?,
        })
    }
}

#[async_trait]
impl Reranker for HttpReranker {
    fn model_id(&self) -> &str {
        &self.client.model_id
    }

    fn describe(&self) -> String {
        format!("{} at {}", self.client.model_id, self.client.base)
    }

    async fn score_pairs(&self, query: &str, candidates: &[String]) -> Result<Vec<RerankScore>, ProviderError> {
        if candidates.is_empty() {
            return Err(ProviderError::InvalidRequest("no candidates to score".into()));
        }
        let resp: RerankResponse = self
            .client
            .post("rerank", &RerankRequest { query, documents: candidates })
            .await?;
        if resp.scores.len() != candidates.len() {
            return Err(self.client.bad(format!(
                "{} scores for {} candidates",
                resp.scores.len(),
                candidates.len()
            )));
        }
        if resp.scores.iter().any(|s| !s.is_finite()) {
            return Err(self.client.bad("non-finite rerank score".into()));
        }
        Ok(resp.scores.into_iter().map(RerankScore).collect())
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_new_tokens: u32,
    temperature: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

#[derive(Debug)]
pub struct HttpGenerator {
    client: Client,
    max_new_tokens: u32,
    temperature: f64,
    seed: u64,
}

impl HttpGenerator {
    pub fn new(base: Url, cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: Client::new(base, cfg)?,
            max_new_tokens: cfg.max_new_tokens,
            temperature: cfg.temperature,
            seed: cfg.seed,
        })
    }
}

#[async_trait]
impl Generator for HttpGenerator {
    fn model_id(&self) -> &str {
        &self.client.model_id
    }

    fn describe(&self) -> String {
        format!("{} at {}", self.client.model_id, self.client.base)
    }

    async fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt".into()));
        }
        let req = GenerateRequest {
            prompt,
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            seed: self.seed,
        };
        let resp: GenerateResponse = self.client.post("generate", &req).await?;
        Ok(resp.text)
    }
}
