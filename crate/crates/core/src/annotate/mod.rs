//! QA dataset generation from chunks, dataset splitting and annotator agreement.

mod kappa;
mod parse;
mod prompt;
mod split;

use std::collections::HashSet;
use std::path::Path;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::chunk::Chunk;
use crate::provider::Generator;
use crate::{jsonl, Error, Result};

pub use kappa::{chance_agreement_from, cohen_kappa, AgreementResult};
pub use parse::{parse_qa_response, render_pairs, ParsedPairs};
pub use prompt::build_annotation_prompt;
pub use split::{split_dataset, train_len, DEFAULT_TRAIN_FRACTION};

pub const DEFAULT_NUM_QAS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answer: String,
    pub chunk_id: String,
    pub split: Split,
}

impl QAPair {
    pub fn new(question: impl Into<String>, answer: impl Into<String>, chunk_id: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            answer: answer.into(),
            chunk_id: chunk_id.into(),
            split: Split::Unsplit,
        }
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<QAPair>> {
    let pairs: Vec<QAPair> = jsonl::read(path)?;
    for (i, p) in pairs.iter().enumerate() {
        if p.question.trim().is_empty() || p.answer.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "{}: pair {} has an empty question or answer",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(pairs)
}

pub fn write_pairs(path: &Path, pairs: &[QAPair]) -> Result<()> {
    jsonl::write(path, pairs)
}

/// Shuffles and labels pairs; train records come first in the result.
pub fn split_pairs(pairs: Vec<QAPair>, train_fraction: f64, seed: u64) -> Result<Vec<QAPair>> {
    let (mut train, mut test) = split_dataset(pairs, train_fraction, seed)?;
    train.iter_mut().for_each(|p| p.split = Split::Train);
    test.iter_mut().for_each(|p| p.split = Split::Test);
    train.append(&mut test);
    Ok(train)
}

#[derive(Debug, Clone, Copy)]
pub struct AnnotateOptions {
    pub num_qas: usize,
    /// Concurrent provider calls.
    pub concurrency: usize,
    /// Extra attempts per chunk after a parse or provider failure.
    pub retries: u32,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        Self {
            num_qas: DEFAULT_NUM_QAS,
            concurrency: 4,
            retries: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkStatus {
    Ok,
    ParseFailed,
    ProviderFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkAnnotation {
    pub chunk_id: String,
    pub status: ChunkStatus,
    pub attempts: u32,
    pub pairs_kept: usize,
    pub dropped_invalid: usize,
    pub dropped_duplicate: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub chunks: Vec<ChunkAnnotation>,
    pub total_pairs: usize,
    pub parse_failures: usize,
    pub provider_failures: usize,
}

/// Annotates every chunk; results keep chunk order regardless of concurrency.
pub async fn annotate_corpus(
    chunks: &[Chunk],
    generator: &dyn Generator,
    opts: AnnotateOptions,
) -> Result<(Vec<QAPair>, AnnotationReport)> {
    if opts.num_qas < 1 {
        return Err(Error::InvalidInput("num_qas must be at least 1".into()));
    }
    let results: Vec<(Vec<QAPair>, ChunkAnnotation)> = stream::iter(chunks)
        .map(|c| annotate_chunk(c, generator, opts))
        .buffered(opts.concurrency.max(1))
        .collect()
        .await;

    let mut pairs = Vec::new();
    let mut report = AnnotationReport::default();
    for (mut p, entry) in results {
        match entry.status {
            ChunkStatus::Ok => {}
            ChunkStatus::ParseFailed => report.parse_failures += 1,
            ChunkStatus::ProviderFailed => report.provider_failures += 1,
        }
        pairs.append(&mut p);
        report.chunks.push(entry);
    }
    report.total_pairs = pairs.len();
    Ok((pairs, report))
}

async fn annotate_chunk(chunk: &Chunk, generator: &dyn Generator, opts: AnnotateOptions) -> (Vec<QAPair>, ChunkAnnotation) {
    let prompt = build_annotation_prompt(&chunk.text, opts.num_qas);
    let mut entry = ChunkAnnotation {
        chunk_id: chunk.chunk_id.clone(),
        status: ChunkStatus::Ok,
        attempts: 0,
        pairs_kept: 0,
        dropped_invalid: 0,
        dropped_duplicate: 0,
        error: None,
    };
    while entry.attempts <= opts.retries {
        entry.attempts += 1;
        let raw = match generator.generate(&prompt).await {
            Ok(raw) => raw,
            Err(e) => {
                tracing::warn!(chunk = %chunk.chunk_id, attempt = entry.attempts, error = %e, "annotation call failed");
                entry.status = ChunkStatus::ProviderFailed;
                entry.error = Some(e.to_string());
                continue;
            }
        };
        match parse_qa_response(&raw) {
            Ok(parsed) => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for (q, a) in parsed.pairs {
                    if seen.insert((q.clone(), a.clone())) {
                        out.push(QAPair::new(q, a, &chunk.chunk_id));
                    } else {
                        entry.dropped_duplicate += 1;
                    }
                }
                entry.status = ChunkStatus::Ok;
                entry.error = None;
                entry.dropped_invalid = parsed.dropped;
                entry.pairs_kept = out.len();
                return (out, entry);
            }
            Err(e) => {
                tracing::warn!(chunk = %chunk.chunk_id, attempt = entry.attempts, "unparseable annotation response");
                entry.status = ChunkStatus::ParseFailed;
                entry.error = Some(e.to_string());
            }
        }
    }
    tracing::warn!(chunk = %chunk.chunk_id, "chunk skipped");
    (Vec::new(), entry)
}
