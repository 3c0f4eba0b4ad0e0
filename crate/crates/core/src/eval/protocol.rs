use std::fmt::Write as _;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{answer_cosine, bleu, token_prf, DEFAULT_BLEU_ORDER};
use crate::annotate::QAPair;
use crate::generation::{AnswerError, QaPipeline, SystemAnswer};
use crate::provider::Embedder;
use crate::{Error, Result};

/// Something that answers questions, with or without retrieval.
#[async_trait]
pub trait AnswerSystem: Send + Sync {
    async fn answer(&self, question: &str, rag: bool) -> std::result::Result<SystemAnswer, AnswerError>;
}

#[async_trait]
impl AnswerSystem for QaPipeline {
    async fn answer(&self, question: &str, rag: bool) -> std::result::Result<SystemAnswer, AnswerError> {
        if rag {
            QaPipeline::answer(self, question).await
        } else {
            self.answer_baseline(question).await
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub sample_size: usize,
    pub num_runs: usize,
    pub seed: u64,
    pub rag_enabled: bool,
    /// Items answered concurrently within a run.
    #[serde(skip)]
    pub concurrency: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sample_size: 128,
            num_runs: 4,
            seed: 0,
            rag_enabled: true,
            concurrency: 4,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 1 || self.num_runs < 1 {
            return Err(Error::InvalidInput("sample_size and num_runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub run: usize,
    pub question: String,
    pub gold: String,
    pub chunk_id: String,
    pub prediction: Option<String>,
    pub used_rag: bool,
    pub context_ids: Vec<String>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub cosine: Option<f64>,
    pub bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ItemRecord {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Cosine => self.cosine,
            Metric::Bleu => self.bleu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Cosine,
    Bleu,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Cosine, Metric::Bleu];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation; `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }

    pub fn cell(&self) -> String {
        format!("{:.3} ({:.3})", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub cosine: Option<MeanStd>,
    pub bleu: Option<MeanStd>,
}

impl MetricStats {
    pub fn get(&self, m: Metric) -> Option<MeanStd> {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Cosine => self.cosine,
            Metric::Bleu => self.bleu,
        }
    }

    fn set(&mut self, m: Metric, v: Option<MeanStd>) {
        let slot = match m {
            Metric::Precision => &mut self.precision,
            Metric::Recall => &mut self.recall,
            Metric::F1 => &mut self.f1,
            Metric::Cosine => &mut self.cosine,
            Metric::Bleu => &mut self.bleu,
        };
        *slot = v;
    }

    fn from_fn(mut f: impl FnMut(Metric) -> Option<MeanStd>) -> Self {
        let mut s = Self::default();
        for m in Metric::ALL {
            s.set(m, f(m));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub items: usize,
    pub failed: usize,
    /// Mean and per-item spread of each metric within this run.
    pub stats: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    pub dataset_size: usize,
    pub sample_size: usize,
    pub items: Vec<ItemRecord>,
    pub runs: Vec<RunSummary>,
    /// Mean and standard deviation of the per-run means.
    pub aggregate: MetricStats,
    pub failed_items: usize,
}

impl MetricReport {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-run means and cross-run aggregates recomputed from item records.
pub fn summarize(items: &[ItemRecord], runs: &[(usize, u64)]) -> (Vec<RunSummary>, MetricStats) {
    let summaries: Vec<RunSummary> = runs
        .iter()
        .map(|&(run, seed)| {
            let in_run: Vec<&ItemRecord> = items.iter().filter(|i| i.run == run).collect();
            RunSummary {
                run,
                seed,
                items: in_run.len(),
                failed: in_run.iter().filter(|i| i.error.is_some()).count(),
                stats: MetricStats::from_fn(|m| {
                    let vals: Vec<f64> = in_run.iter().filter_map(|i| i.metric(m)).collect();
                    MeanStd::of(&vals)
                }),
            }
        })
        .collect();
    let aggregate = MetricStats::from_fn(|m| {
        let means: Vec<f64> = summaries.iter().filter_map(|s| s.stats.get(m).map(|v| v.mean)).collect();
        MeanStd::of(&means)
    });
    (summaries, aggregate)
}

/// Sampled evaluation: each run draws its own sample without replacement
/// using `seed + run`.
pub async fn run_eval(
    dataset: &[QAPair],
    system: &dyn AnswerSystem,
    eval_embedder: Option<&dyn Embedder>,
    config: EvalConfig,
) -> Result<MetricReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("evaluation dataset"));
    }
    let sample_size = if dataset.len() < config.sample_size {
        tracing::warn!(
            requested = config.sample_size,
            available = dataset.len(),
            "dataset smaller than the sample size, using all of it"
        );
        dataset.len()
    } else {
        config.sample_size
    };

    let mut items = Vec::with_capacity(sample_size * config.num_runs);
    let mut runs = Vec::with_capacity(config.num_runs);
    for run in 0..config.num_runs {
        let seed = config.seed.wrapping_add(run as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = rand::seq::index::sample(&mut rng, dataset.len(), sample_size).into_vec();
        let mut records: Vec<ItemRecord> = stream::iter(picks)
            .map(|i| evaluate_item(run, &dataset[i], system, eval_embedder, config.rag_enabled))
            .buffered(config.concurrency.max(1))
            .collect()
            .await;
        items.append(&mut records);
        runs.push((run, seed));
    }
    let (summaries, aggregate) = summarize(&items, &runs);
    let failed_items = items.iter().filter(|i| i.error.is_some()).count();
    Ok(MetricReport {
        config,
        dataset_size: dataset.len(),
        sample_size,
        items,
        runs: summaries,
        aggregate,
        failed_items,
    })
}

async fn evaluate_item(
    run: usize,
    pair: &QAPair,
    system: &dyn AnswerSystem,
    eval_embedder: Option<&dyn Embedder>,
    rag: bool,
) -> ItemRecord {
    let mut rec = ItemRecord {
        run,
        question: pair.question.clone(),
        gold: pair.answer.clone(),
        chunk_id: pair.chunk_id.clone(),
        prediction: None,
        used_rag: false,
        context_ids: Vec::new(),
        precision: None,
        recall: None,
        f1: None,
        cosine: None,
        bleu: None,
        error: None,
    };
    let answer = match system.answer(&pair.question, rag).await {
        Ok(a) => a,
        Err(e) => {
            tracing::warn!(question = %pair.question, error = %e, "item failed");
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let prf = token_prf(&answer.answer, &pair.answer);
    rec.precision = Some(prf.precision);
    rec.recall = Some(prf.recall);
    rec.f1 = Some(prf.f1);
    rec.bleu = Some(bleu(&answer.answer, &pair.answer, DEFAULT_BLEU_ORDER).expect("order is positive"));
    if let Some(e) = eval_embedder {
        match answer_cosine(&answer.answer, &pair.answer, e).await {
            Ok(c) => rec.cosine = Some(c),
            Err(err) => tracing::warn!(error = %err, "answer cosine unavailable for item"),
        }
    }
    rec.used_rag = answer.used_rag;
    rec.context_ids = answer.contexts.iter().map(|c| c.chunk_id.clone()).collect();
    rec.prediction = Some(answer.answer);
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub recall: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub cosine: Option<MeanStd>,
    pub bleu: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

pub const MISSING_CELL: &str = "n/a";

impl ComparisonRow {
    pub fn from_report(name: &str, r: &MetricReport) -> Self {
        Self {
            name: name.to_owned(),
            recall: r.aggregate.recall,
            f1: r.aggregate.f1,
            cosine: r.aggregate.cosine,
            bleu: r.aggregate.bleu,
        }
    }
}

impl Comparison {
    pub fn render_text(&self) -> String {
        let header = ["Configuration", "Recall", "F1 Score", "Cosine", "BLEU"];
        let cell = |v: &Option<MeanStd>| v.map_or_else(|| MISSING_CELL.to_owned(), |v| v.cell());
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| [r.name.clone(), cell(&r.recall), cell(&r.f1), cell(&r.cosine), cell(&r.bleu)])
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            padded.join(" | ").trim_end().to_owned()
        };
        let mut out = String::new();
        writeln!(out, "{}", line(header.to_vec())).unwrap();
        writeln!(out, "{}", widths.map(|w| "-".repeat(w)).join("-|-")).unwrap();
        for row in &body {
            writeln!(out, "{}", line(row.iter().map(String::as_str).collect())).unwrap();
        }
        out
    }
}

pub fn compare_configs(reports: &[(String, MetricReport)]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::InvalidInput("comparison needs at least two reports".into()));
    }
    Ok(Comparison {
        rows: reports.iter().map(|(name, r)| ComparisonRow::from_report(name, r)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    #[async_trait]
    impl AnswerSystem for Echo {
        async fn answer(&self, question: &str, rag: bool) -> std::result::Result<SystemAnswer, AnswerError> {
            if question.contains("fail") {
                return Err(Error::InvalidInput("boom".into()).into());
            }
            Ok(SystemAnswer {
                question: question.into(),
                answer: if rag { question.replace("q", "a") } else { "nothing".into() },
                contexts: vec![],
                used_rag: rag,
                model_id: "echo".into(),
                latency_ms: 0,
                retrieval_ms: 0,
                generation_ms: 0,
                answer_words: 1,
                truncated: false,
                rerank_degraded: false,
            })
        }
    }

    fn dataset(n: usize) -> Vec<QAPair> {
        (0..n).map(|i| QAPair::new(format!("q{i}"), format!("a{i}"), "c")).collect()
    }

    #[tokio::test]
    async fn runs_and_aggregates() {
        let cfg = EvalConfig {
            sample_size: 5,
            num_runs: 4,
            seed: 7,
            ..Default::default()
        };
        let r = run_eval(&dataset(20), &Echo, None, cfg).await.unwrap();
        assert_eq!(r.runs.len(), 4);
        assert_eq!(r.items.len(), 20);
        assert_eq!(r.aggregate.recall.unwrap().mean, 1.0);
        assert!(r.aggregate.cosine.is_none());
        let again = run_eval(&dataset(20), &Echo, None, cfg).await.unwrap();
        assert_eq!(r.to_json(), again.to_json());
        for run in &r.runs {
            let qs: std::collections::HashSet<_> = r.items.iter().filter(|i| i.run == run.run).map(|i| &i.question).collect();
            assert_eq!(qs.len(), 5);
        }
    }

    #[tokio::test]
    async fn failures_are_excluded_and_counted() {
        let mut data = dataset(3);
        data.push(QAPair::new("fail", "x", "c"));
        let cfg = EvalConfig {
            sample_size: 10,
            num_runs: 1,
            ..Default::default()
        };
        let r = run_eval(&data, &Echo, None, cfg).await.unwrap();
        assert_eq!(r.sample_size, 4);
        assert_eq!(r.failed_items, 1);
        assert_eq!(r.runs[0].failed, 1);
        assert_eq!(r.aggregate.recall.unwrap().mean, 1.0);
    }

    #[test]
    fn population_std() {
        let s = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert_eq!(MeanStd::of(&[0.409]).unwrap().cell(), "0.409 (0.000)");
        assert!(MeanStd::of(&[]).is_none());
    }

    #[tokio::test]
    async fn comparison_table() {
        let cfg = EvalConfig {
            sample_size: 4,
            num_runs: 2,
            ..Default::default()
        };
        let rag = run_eval(&dataset(8), &Echo, None, cfg).await.unwrap();
        let base = run_eval(&dataset(8), &Echo, None, EvalConfig { rag_enabled: false, ..cfg }).await.unwrap();
        let table = compare_configs(&[("Baseline".into(), base.clone()), ("RAG".into(), rag)]).unwrap();
        assert!(table.rows[1].recall.unwrap().mean > table.rows[0].recall.unwrap().mean);
        let text = table.render_text();
        assert!(text.starts_with("Configuration | Recall"));
        assert!(text.contains("1.000 (0.000)"));
        assert!(text.contains(MISSING_CELL));
        assert!(compare_configs(&[("only".into(), base)]).is_err());
    }
}
