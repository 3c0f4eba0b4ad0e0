//! Prompt rendering and the answer chain, with and without retrieved context.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::annotate::QAPair;
use crate::chunk::Chunk;
use crate::provider::{Embedder, Generator, Reranker};
use crate::retrieval::{KnowledgeBase, RetrievalParams, ScoredChunk};
use crate::{Error, Result};

pub const QA_TEMPLATE: &str = "\n[INST]<<SYS>> You are an assistant for question-answering tasks. Use the following pieces of retrieved context to answer the question. If you don't know the answer, just say that you don't know. Use 50 words maximum and keep the answer concise.<</SYS>> \nQuestion: {question} \nContext: {context} \nAnswer: [/INST]\n";

pub const FINETUNE_TEMPLATE: &str = "\n[INST]<<SYS>> You are an assistant for question-answering tasks. Use the following pieces of retrieved context to answer the question. If you don't know the answer, just say that you don't know. Summarize your answer and ensure the answer only contains key points.<</SYS>> \nQuestion: {question} \nContext: \n{context}\nAnswer: [/INST]\n{answer}\n";

pub const CONTEXT_SEPARATOR: &str = "\n\n";
pub const REFUSAL: &str = "I don't know.";
/// Roughly a 4k-token window less room for the answer.
pub const DEFAULT_CHAR_BUDGET: usize = 12_000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Lit(String),
    Question,
    Context,
    Answer,
}

/// A prompt template with `{question}`, `{context}` and optionally
/// `{answer}` slots, substituted in one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaPromptTemplate {
    segments: Vec<Segment>,
}

impl Default for QaPromptTemplate {
    fn default() -> Self {
        Self::parse(QA_TEMPLATE).expect("built-in template is valid")
    }
}

impl QaPromptTemplate {
    pub fn parse(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        let mut rest = text;
        let slots = [("{question}", Segment::Question), ("{context}", Segment::Context), ("{answer}", Segment::Answer)];
        loop {
            let next = slots
                .iter()
                .filter_map(|(tag, seg)| rest.find(tag).map(|i| (i, *tag, seg)))
                .min_by_key(|(i, _, _)| *i);
            match next {
                Some((i, tag, seg)) => {
                    if i > 0 {
                        segments.push(Segment::Lit(rest[..i].to_owned()));
                    }
                    segments.push(seg.clone());
                    rest = &rest[i + tag.len()..];
                }
                None => {
                    if !rest.is_empty() {
                        segments.push(Segment::Lit(rest.to_owned()));
                    }
                    break;
                }
            }
        }
        for (tag, seg) in &slots[..2] {
            if !segments.contains(seg) {
                return Err(Error::InvalidInput(format!("template has no {tag} placeholder")));
            }
        }
        Ok(Self { segments })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn finetune() -> Self {
        Self::parse(FINETUNE_TEMPLATE).expect("built-in template is valid")
    }

    pub fn fill(&self, question: &str, context: &str, answer: &str) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Lit(t) => out.push_str(t),
                Segment::Question => out.push_str(question),
                Segment::Context => out.push_str(context),
                Segment::Answer => out.push_str(answer),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub prompt: String,
    /// Leading contexts that made it into the prompt.
    pub contexts_used: usize,
    pub truncated: bool,
}

/// Joins contexts in rank order with blank lines. With a budget, contexts
/// are dropped whole from the tail until the prompt fits (in characters).
pub fn render_qa_prompt(
    question: &str,
    contexts: &[ScoredChunk],
    template: &QaPromptTemplate,
    char_budget: Option<usize>,
) -> Result<RenderedPrompt> {
    if question.trim().is_empty() {
        return Err(Error::InvalidInput("question is empty".into()));
    }
    let texts: Vec<&str> = contexts.iter().map(|c| c.text.as_str()).collect();
    let mut used = texts.len();
    loop {
        let prompt = template.fill(question, &texts[..used].join(CONTEXT_SEPARATOR), "");
        let fits = char_budget.is_none_or(|b| prompt.chars().count() <= b);
        if fits {
            return Ok(RenderedPrompt {
                prompt,
                contexts_used: used,
                truncated: used < texts.len(),
            });
        }
        if used == 0 {
            return Err(Error::InvalidInput(format!(
                "prompt without context is {} characters, over the budget of {}",
                prompt.chars().count(),
                char_budget.unwrap_or_default()
            )));
        }
        used -= 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemAnswer {
    pub question: String,
    pub answer: String,
    /// Exactly the contexts placed in the prompt, in prompt order.
    pub contexts: Vec<ScoredChunk>,
    pub used_rag: bool,
    pub model_id: String,
    pub latency_ms: u64,
    pub retrieval_ms: u64,
    pub generation_ms: u64,
    pub answer_words: usize,
    pub truncated: bool,
    pub rerank_degraded: bool,
}

/// A failed answer; contexts retrieved before the failure are kept.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct AnswerError {
    #[source]
    pub error: Error,
    pub contexts: Vec<ScoredChunk>,
}

impl From<Error> for AnswerError {
    fn from(error: Error) -> Self {
        Self {
            error,
            contexts: Vec::new(),
        }
    }
}

/// Retriever, reranker and generator wired into the answer chain.
#[derive(Clone)]
pub struct QaPipeline {
    pub kb: Arc<KnowledgeBase>,
    pub embedder: Arc<dyn Embedder>,
    pub reranker: Option<Arc<dyn Reranker>>,
    pub generator: Arc<dyn Generator>,
    pub template: QaPromptTemplate,
    pub params: RetrievalParams,
    pub char_budget: Option<usize>,
}

impl QaPipeline {
    pub fn new(
        kb: Arc<KnowledgeBase>,
        embedder: Arc<dyn Embedder>,
        reranker: Option<Arc<dyn Reranker>>,
        generator: Arc<dyn Generator>,
    ) -> Self {
        Self {
            kb,
            embedder,
            reranker,
            generator,
            template: QaPromptTemplate::default(),
            params: RetrievalParams::default(),
            char_budget: Some(DEFAULT_CHAR_BUDGET),
        }
    }

    pub async fn answer(&self, question: &str) -> std::result::Result<SystemAnswer, AnswerError> {
        self.answer_with(question, self.params).await
    }

    /// Answers with per-call retrieval parameters.
    pub async fn answer_with(
        &self,
        question: &str,
        params: RetrievalParams,
    ) -> std::result::Result<SystemAnswer, AnswerError> {
        let start = Instant::now();
        let retrieval = self
            .kb
            .retrieve(question, self.embedder.as_ref(), self.reranker.as_deref(), params)
            .await?;
        let retrieval_ms = start.elapsed().as_millis() as u64;
        let mut contexts = retrieval.results;
        let rendered = render_qa_prompt(question, &contexts, &self.template, self.char_budget)
            .map_err(|error| AnswerError {
                error,
                contexts: contexts.clone(),
            })?;
        contexts.truncate(rendered.contexts_used);
        let mut answer = self.generate(question, rendered, contexts, start).await?;
        answer.retrieval_ms = retrieval_ms;
        answer.rerank_degraded = retrieval.rerank_degraded;
        Ok(answer)
    }

    /// Same template with an empty context slot.
    pub async fn answer_baseline(&self, question: &str) -> std::result::Result<SystemAnswer, AnswerError> {
        let start = Instant::now();
        let rendered = render_qa_prompt(question, &[], &self.template, self.char_budget)?;
        self.generate(question, rendered, Vec::new(), start).await
    }

    async fn generate(
        &self,
        question: &str,
        rendered: RenderedPrompt,
        contexts: Vec<ScoredChunk>,
        start: Instant,
    ) -> std::result::Result<SystemAnswer, AnswerError> {
        let gen_start = Instant::now();
        let raw = match self.generator.generate(&rendered.prompt).await {
            Ok(raw) => raw,
            Err(e) => {
                return Err(AnswerError {
                    error: e.into(),
                    contexts,
                })
            }
        };
        let trimmed = raw.trim();
        let answer = if trimmed.is_empty() { REFUSAL } else { trimmed };
        Ok(SystemAnswer {
            question: question.to_owned(),
            answer: answer.to_owned(),
            used_rag: !contexts.is_empty(),
            contexts,
            model_id: self.generator.model_id().to_owned(),
            latency_ms: start.elapsed().as_millis() as u64,
            retrieval_ms: 0,
            generation_ms: gen_start.elapsed().as_millis() as u64,
            answer_words: answer.split_whitespace().count(),
            truncated: rendered.truncated,
            rerank_degraded: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub question: String,
    pub answer: String,
    pub chunk_id: String,
    pub text: String,
}

/// Supervised fine-tuning records: each pair rendered with its source chunk
/// as the context.
pub fn export_finetune(pairs: &[QAPair], chunks: &[Chunk]) -> Result<Vec<FinetuneRecord>> {
    let by_id: std::collections::HashMap<&str, &Chunk> = chunks.iter().map(|c| (c.chunk_id.as_str(), c)).collect();
    let template = QaPromptTemplate::finetune();
    pairs
        .iter()
        .map(|p| {
            let chunk = by_id
                .get(p.chunk_id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("pair refers to unknown chunk {}", p.chunk_id)))?;
            Ok(FinetuneRecord {
                question: p.question.clone(),
                answer: p.answer.clone(),
                chunk_id: p.chunk_id.clone(),
                text: template.fill(&p.question, &chunk.text, &p.answer),
            })
        })
        .collect()
}
