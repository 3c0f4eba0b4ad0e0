//! Subcommand definitions and their implementations.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kbqa_core::annotate::{
    annotate_corpus, cohen_kappa, read_pairs, split_pairs, write_pairs, AnnotateOptions, QAPair, Split,
    DEFAULT_NUM_QAS, DEFAULT_TRAIN_FRACTION,
};
use kbqa_core::chunk::{chunk_corpus, read_chunks, write_chunks, DEFAULT_CHUNK_SIZE};
use kbqa_core::crawl::scholar::{parse_author_list, ScholarClient, ScholarQuery, DEFAULT_API_BASE};
use kbqa_core::crawl::store::{store_raw, tag_sample};
use kbqa_core::crawl::{parse_seed_list, CrawlPolicy, Crawler, HttpFetcher};
use kbqa_core::eval::{compare_configs, run_eval, Comparison, ComparisonRow, EvalConfig, MetricReport};
use kbqa_core::extract::{ingest, load_clean_corpus, IngestOptions, KeywordSet, DEFAULT_MIN_CHARS};
use kbqa_core::generation::{export_finetune, QaPipeline, QaPromptTemplate, SystemAnswer};
use kbqa_core::provider::{build_embedder, build_generator, build_reranker};
use kbqa_core::retrieval::{build_index, KnowledgeBase, RetrievalParams, VectorIndex};
use kbqa_core::stats::corpus_stats;
use kbqa_core::{jsonl, Error};
use url::Url;

use crate::config::{Config, Slot};
use crate::error::CliError;
use crate::service::{self, AppState, StatsPaths};

type CmdResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "kbqa", version, about = "Domain question answering over a crawled knowledge base")]
pub struct Cli {
    /// TOML config file (default: $KBQA_CONFIG, then ./kbqa.toml).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Breadth-first crawl from a seed list into the raw corpus layout.
    Crawl(CrawlArgs),
    /// Download open-access papers by author and year.
    FetchPapers(FetchPapersArgs),
    /// Extract, clean and filter the raw corpus.
    Ingest(IngestArgs),
    /// Split clean documents into fixed-size word chunks.
    Chunk(ChunkArgs),
    /// Generate QA pairs per chunk with the generation provider.
    Annotate(AnnotateArgs),
    /// Assign train/test splits to a QA dataset.
    Split(SplitArgs),
    /// Cohen's kappa between two annotators' label files.
    Kappa(KappaArgs),
    /// Embed the chunk store into a vector index.
    Index(IndexArgs),
    /// Show retrieval results for a question.
    Query(QueryArgs),
    /// Answer a question.
    Ask(AskArgs),
    /// Sampled multi-run evaluation of the answer chain.
    Eval(EvalArgs),
    /// Side-by-side table of evaluation reports.
    Compare(CompareArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Write supervised fine-tuning records from QA pairs.
    ExportFinetune(ExportArgs),
    /// Counts over the corpus, chunk and QA stores.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct CrawlArgs {
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub depth: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub max_pages: usize,
    #[arg(long, default_value_t = 500)]
    pub delay_ms: u64,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = 20_000)]
    pub timeout_ms: u64,
    /// Ignore robots.txt.
    #[arg(long)]
    pub no_robots: bool,
    /// File of crawled URLs to copy into `sample/`.
    #[arg(long)]
    pub sample: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchPapersArgs {
    #[arg(long)]
    pub authors: PathBuf,
    #[arg(long)]
    pub year: i32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_API_BASE)]
    pub api_base: String,
    #[arg(long, env = "S2_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
    /// Include papers not flagged open access.
    #[arg(long)]
    pub include_closed: bool,
    #[arg(long, default_value_t = 5)]
    pub max_retries: u32,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keyword file, one per line.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_CHARS)]
    pub min_chars: usize,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NUM_QAS)]
    pub num_qas: usize,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, default_value_t = 1)]
    pub retries: u32,
    /// Per-chunk outcome report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Defaults to rewriting the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub fraction: f64,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// CSV with a `label` column and optionally an `item` column.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
}

#[derive(Debug, Args)]
pub struct RetrievalFlags {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub fetch_k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub no_rerank: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub q: String,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[arg(long)]
    pub q: String,
    #[arg(long)]
    pub no_rag: bool,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitFilter {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitFilter::Test)]
    pub split: SplitFilter,
    #[arg(long, default_value_t = 4)]
    pub runs: usize,
    #[arg(long, default_value_t = 128)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_rag: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Row label in the printed table.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 2.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Row labels, one per report (default: file stems).
    #[arg(long, num_args = 1..)]
    pub names: Vec<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
    /// Enable CORS for the UI origin.
    #[arg(long)]
    pub dev: bool,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitFilter::Train)]
    pub split: SplitFilter,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    #[arg(long)]
    pub qa: Option<PathBuf>,
}

pub async fn run(cli: Cli) -> CmdResult {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Crawl(a) => crawl(&cfg, a).await,
        Command::FetchPapers(a) => fetch_papers(&cfg, a).await,
        Command::Ingest(a) => ingest_cmd(&cfg, a),
        Command::Chunk(a) => chunk(&cfg, a),
        Command::Annotate(a) => annotate(&cfg, a).await,
        Command::Split(a) => split(&cfg, a),
        Command::Kappa(a) => kappa(a),
        Command::Index(a) => index(&cfg, a).await,
        Command::Query(a) => query(&cfg, a).await,
        Command::Ask(a) => ask(&cfg, a).await,
        Command::Eval(a) => eval(&cfg, a).await,
        Command::Compare(a) => compare(a),
        Command::Serve(a) => serve(&cfg, a).await,
        Command::ExportFinetune(a) => export(&cfg, a),
        Command::Stats(a) => stats(&cfg, a),
    }
}

fn or_cfg(flag: Option<PathBuf>, default: &Path) -> PathBuf {
    flag.unwrap_or_else(|| default.to_path_buf())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::missing(format!("{} not found", path.display())),
        _ => CliError::new(crate::error::EXIT_FAILURE, format!("{}: {e}", path.display())),
    })
}

fn require_file(path: &Path, what: &str) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing(format!("{what} {} not found", path.display())))
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::new(1, format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::new(1, format!("{}: {e}", path.display())))
}

async fn crawl(cfg: &Config, a: CrawlArgs) -> CmdResult {
    let seeds = parse_seed_list(&read_text(&a.seeds)?)?;
    if seeds.is_empty() {
        return Err(CliError::validation(format!("{} lists no seed URLs", a.seeds.display())));
    }
    let out = or_cfg(a.out, &cfg.paths.raw);
    let policy = CrawlPolicy {
        max_depth: a.depth,
        max_pages: a.max_pages,
        per_host_delay: Duration::from_millis(a.delay_ms),
        timeout: Duration::from_millis(a.timeout_ms),
        workers: a.workers,
        respect_robots: !a.no_robots,
        ..CrawlPolicy::default()
    };
    let fetcher = HttpFetcher::new(&policy.user_agent, policy.timeout).map_err(|e| CliError::validation(e.to_string()))?;
    let report = Crawler::new(fetcher, policy)?.crawl(&seeds).await?;
    for d in &report.documents {
        store_raw(d, &out)?;
    }
    let summary = serde_json::json!({
        "stored": report.documents.len(),
        "failures": report.failures,
        "skipped": report.skipped,
        "truncated": report.truncated,
    });
    write_json(&out.join("crawl_report.json"), &summary)?;
    if let Some(sample) = a.sample {
        let urls = parse_seed_list(&read_text(&sample)?)?;
        let n = tag_sample(&out, &urls)?;
        eprintln!("tagged {n} of {} sample URLs", urls.len());
    }
    println!(
        "stored {} documents under {} ({} failures, {} skipped{})",
        report.documents.len(),
        out.display(),
        report.failures.len(),
        report.skipped.len(),
        if report.truncated { ", truncated at max pages" } else { "" }
    );
    Ok(())
}

async fn fetch_papers(cfg: &Config, a: FetchPapersArgs) -> CmdResult {
    let authors = parse_author_list(&read_text(&a.authors)?);
    let query = ScholarQuery {
        author_names: authors,
        year: a.year,
        open_access_only: !a.include_closed,
    };
    query.validate()?;
    let base = Url::parse(&a.api_base).map_err(|e| CliError::validation(format!("--api-base: {e}")))?;
    let client = ScholarClient::new(base, Duration::from_secs(60))?
        .with_api_key(a.api_key)
        .with_retry(a.max_retries, Duration::from_secs(1));
    let report = client.fetch_papers(&query).await?;
    let out = or_cfg(a.out, &cfg.paths.raw);
    for d in &report.documents {
        store_raw(d, &out)?;
    }
    write_json(&out.join("paper_skips.json"), &report.skipped)?;
    println!("stored {} papers, skipped {}", report.documents.len(), report.skipped.len());
    Ok(())
}

fn ingest_cmd(cfg: &Config, a: IngestArgs) -> CmdResult {
    let raw = or_cfg(a.raw, &cfg.paths.raw);
    if !raw.is_dir() {
        return Err(CliError::missing(format!("raw corpus {} not found", raw.display())));
    }
    let out = or_cfg(a.out, &cfg.paths.clean);
    let keywords = match a.keywords {
        Some(p) => KeywordSet::parse(&read_text(&p)?)?,
        None => KeywordSet::default(),
    };
    let opts = IngestOptions {
        keywords,
        min_chars: a.min_chars,
        ..IngestOptions::default()
    };
    let report = ingest(&raw, &out, &opts)?;
    for (cat, c) in &report.counts {
        let dropped: usize = c.dropped.values().sum();
        println!("{cat:?}: kept {}, dropped {dropped}, errors {}", c.kept, c.errors);
    }
    Ok(())
}

fn chunk(cfg: &Config, a: ChunkArgs) -> CmdResult {
    let clean = or_cfg(a.clean, &cfg.paths.clean);
    if !clean.is_dir() {
        return Err(CliError::missing(format!("clean corpus {} not found", clean.display())));
    }
    let docs = load_clean_corpus(&clean)?;
    let chunks = chunk_corpus(&docs, a.size)?;
    let out = or_cfg(a.out, &cfg.paths.chunks);
    write_chunks(&out, &chunks)?;
    println!("{} chunks from {} documents", chunks.len(), docs.len());
    Ok(())
}

async fn annotate(cfg: &Config, a: AnnotateArgs) -> CmdResult {
    let path = or_cfg(a.chunks, &cfg.paths.chunks);
    require_file(&path, "chunk store")?;
    let chunks = read_chunks(&path)?;
    let generator = build_generator(&cfg.require_provider(Slot::Generate)?)?;
    let opts = AnnotateOptions {
        num_qas: a.num_qas,
        concurrency: a.concurrency,
        retries: a.retries,
    };
    let (pairs, report) = annotate_corpus(&chunks, generator.as_ref(), opts).await?;
    write_pairs(&or_cfg(a.out, &cfg.paths.qa), &pairs)?;
    if let Some(r) = a.report {
        write_json(&r, &report)?;
    }
    println!(
        "{} pairs from {} chunks ({} parse failures, {} provider failures)",
        pairs.len(),
        chunks.len(),
        report.parse_failures,
        report.provider_failures
    );
    if !chunks.is_empty() && report.provider_failures == chunks.len() {
        return Err(CliError::provider("every annotation call failed"));
    }
    Ok(())
}

fn split(cfg: &Config, a: SplitArgs) -> CmdResult {
    let input = or_cfg(a.input, &cfg.paths.qa);
    require_file(&input, "QA dataset")?;
    let pairs = split_pairs(read_pairs(&input)?, a.fraction, a.seed)?;
    let train = pairs.iter().filter(|p| p.split == Split::Train).count();
    write_pairs(&a.out.unwrap_or(input), &pairs)?;
    println!("train {train}, test {}", pairs.len() - train);
    Ok(())
}

/// Labels in row order, or keyed by the `item`/`id` column when present.
fn read_labels(path: &Path) -> Result<(Option<Vec<String>>, Vec<String>), CliError> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let label = col("label").ok_or_else(|| CliError::validation(format!("{}: no `label` column", path.display())))?;
    let item = col("item").or_else(|| col("id"));
    let (mut items, mut labels) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        labels.push(rec.get(label).unwrap_or("").to_owned());
        if let Some(i) = item {
            items.push(rec.get(i).unwrap_or("").to_owned());
        }
    }
    Ok((item.map(|_| items), labels))
}

fn kappa(a: KappaArgs) -> CmdResult {
    let (items_a, labels_a) = read_labels(&a.a)?;
    let (items_b, mut labels_b) = read_labels(&a.b)?;
    if let (Some(ia), Some(ib)) = (&items_a, &items_b) {
        let by_item: BTreeMap<&str, &str> = ib.iter().map(String::as_str).zip(labels_b.iter().map(String::as_str)).collect();
        if by_item.len() != ib.len() || ia.len() != ib.len() {
            return Err(CliError::validation("item columns differ or contain duplicates"));
        }
        labels_b = ia
            .iter()
            .map(|i| {
                by_item
                    .get(i.as_str())
                    .map(|s| s.to_string())
                    .ok_or_else(|| CliError::validation(format!("item {i} missing from {}", a.b.display())))
            })
            .collect::<Result<_, _>>()?;
    }
    let r = cohen_kappa(&labels_a, &labels_b)?;
    println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?);
    Ok(())
}

async fn index(cfg: &Config, a: IndexArgs) -> CmdResult {
    let path = or_cfg(a.chunks, &cfg.paths.chunks);
    require_file(&path, "chunk store")?;
    let chunks = read_chunks(&path)?;
    let embedder = build_embedder(&cfg.require_provider(Slot::Embed)?)?;
    let built_at = chrono::Utc::now().timestamp();
    let index = build_index(&chunks, embedder.as_ref(), a.batch, built_at).await?;
    let out = or_cfg(a.out, &cfg.paths.index);
    index.save(&out)?;
    println!("indexed {} chunks (dim {}) into {}", index.len(), index.dim(), out.display());
    Ok(())
}

fn retrieval_params(cfg: &Config, f: &RetrievalFlags) -> Result<RetrievalParams, CliError> {
    let mut p = cfg.retrieval;
    if let Some(k) = f.fetch_k {
        p.fetch_k = k;
    }
    if let Some(k) = f.k {
        p.final_k = k;
    }
    if let Some(l) = f.lambda {
        p.lambda = l;
    }
    if f.no_rerank {
        p.rerank = false;
    }
    p.validate()?;
    Ok(p)
}

fn load_kb(cfg: &Config, f: &RetrievalFlags) -> Result<KnowledgeBase, CliError> {
    let index_path = or_cfg(f.index.clone(), &cfg.paths.index);
    require_file(&index_path, "index")?;
    let chunk_path = or_cfg(f.chunks.clone(), &cfg.paths.chunks);
    require_file(&chunk_path, "chunk store")?;
    let index = VectorIndex::load(&index_path)?;
    Ok(KnowledgeBase::new(index, read_chunks(&chunk_path)?)?)
}

/// Pipeline from config; the reranker is optional unless reranking is on.
fn build_pipeline(cfg: &Config, f: &RetrievalFlags, template: Option<&Path>) -> Result<QaPipeline, CliError> {
    let params = retrieval_params(cfg, f)?;
    let kb = load_kb(cfg, f)?;
    let embedder = build_embedder(&cfg.require_provider(Slot::Embed)?)?;
    if embedder.model_id() != kb.index().model_id() {
        tracing::warn!(
            index = kb.index().model_id(),
            embedder = embedder.model_id(),
            "index was built with a different embedding model"
        );
    }
    let reranker = if params.rerank {
        Some(build_reranker(&cfg.require_provider(Slot::Rerank)?)?)
    } else {
        None
    };
    let generator = build_generator(&cfg.require_provider(Slot::Generate)?)?;
    let mut p = QaPipeline::new(Arc::new(kb), embedder, reranker, generator);
    p.params = params;
    p.char_budget = cfg.char_budget();
    if let Some(t) = template.or(cfg.generation.template.as_deref()) {
        p.template = QaPromptTemplate::load(t)?;
    }
    Ok(p)
}

async fn query(cfg: &Config, a: QueryArgs) -> CmdResult {
    let params = retrieval_params(cfg, &a.retrieval)?;
    let kb = load_kb(cfg, &a.retrieval)?;
    let embedder = build_embedder(&cfg.require_provider(Slot::Embed)?)?;
    let reranker = if params.rerank {
        Some(build_reranker(&cfg.require_provider(Slot::Rerank)?)?)
    } else {
        None
    };
    let r = kb.retrieve(&a.q, embedder.as_ref(), reranker.as_deref(), params).await?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?);
        return Ok(());
    }
    if r.rerank_degraded {
        eprintln!("warning: reranking failed, showing similarity order");
    }
    for (i, c) in r.results.iter().enumerate() {
        let rr = c.rerank_score.map_or_else(|| "-".to_owned(), |s| format!("{s:.4}"));
        println!("{:>2}. {}  sim={:.4} rerank={rr}  {}", i + 1, c.chunk_id, c.sim_score, c.source_path);
        println!("    {}", snippet(&c.text, 160));
    }
    Ok(())
}

fn snippet(text: &str, max: usize) -> String {
    let mut s: String = text.chars().take(max).collect();
    if text.chars().count() > max {
        s.push_str("...");
    }
    s
}

fn print_answer(a: &SystemAnswer) {
    println!("{}", a.answer);
    if a.contexts.is_empty() {
        println!("\n(no context used)");
        return;
    }
    println!();
    for (i, c) in a.contexts.iter().enumerate() {
        let rr = c.rerank_score.map_or_else(|| "-".to_owned(), |s| format!("{s:.4}"));
        let src = if c.source_path.is_empty() { "-" } else { &c.source_path };
        println!("[{}] {} ({src}) sim={:.4} rerank={rr}", i + 1, c.chunk_id, c.sim_score);
    }
    if a.truncated {
        println!("(some contexts were dropped to fit the prompt budget)");
    }
}

async fn ask(cfg: &Config, a: AskArgs) -> CmdResult {
    if a.q.trim().is_empty() {
        return Err(CliError::validation("question is empty"));
    }
    let p = build_pipeline(cfg, &a.retrieval, a.template.as_deref())?;
    let answer = if a.no_rag { p.answer_baseline(&a.q).await? } else { p.answer(&a.q).await? };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&answer).map_err(Error::from)?);
    } else {
        print_answer(&answer);
    }
    Ok(())
}

fn filter_split(pairs: Vec<QAPair>, f: SplitFilter) -> Vec<QAPair> {
    match f {
        SplitFilter::All => pairs,
        SplitFilter::Train => pairs.into_iter().filter(|p| p.split == Split::Train).collect(),
        SplitFilter::Test => pairs.into_iter().filter(|p| p.split == Split::Test).collect(),
    }
}

async fn eval(cfg: &Config, a: EvalArgs) -> CmdResult {
    let path = or_cfg(a.dataset, &cfg.paths.qa);
    require_file(&path, "QA dataset")?;
    let data = filter_split(read_pairs(&path)?, a.split);
    if data.is_empty() {
        return Err(CliError::validation(format!("no {:?} pairs in {}", a.split, path.display())));
    }
    let mut flags = a.retrieval;
    if a.no_rag {
        flags.no_rerank = true;
    }
    let p = build_pipeline(cfg, &flags, a.template.as_deref())?;
    let eval_embedder = cfg.provider(Slot::EvalEmbed)?.map(|c| build_embedder(&c)).transpose()?;
    if eval_embedder.is_none() {
        eprintln!("note: no eval embedder configured, cosine column left empty");
    }
    let config = EvalConfig {
        sample_size: a.sample,
        num_runs: a.runs,
        seed: a.seed,
        rag_enabled: !a.no_rag,
        concurrency: a.concurrency,
    };
    let report = run_eval(&data, &p, eval_embedder.as_deref(), config).await?;
    write_file(&a.out, report.to_json().as_bytes())?;
    let name = a.name.unwrap_or_else(|| if a.no_rag { "Baseline".into() } else { "RAG".into() });
    print!("{}", render_report(&name, &report));
    if report.failed_items == report.items.len() {
        return Err(CliError::provider("every evaluation item failed"));
    }
    Ok(())
}

pub fn render_report(name: &str, report: &MetricReport) -> String {
    let table = Comparison {
        rows: vec![ComparisonRow::from_report(name, report)],
    };
    let mut out = table.render_text();
    out.push_str(&format!(
        "\n{} runs x {} items from {} pairs, {} failed\n",
        report.runs.len(),
        report.sample_size,
        report.dataset_size,
        report.failed_items
    ));
    out
}

fn compare(a: CompareArgs) -> CmdResult {
    if !a.names.is_empty() && a.names.len() != a.reports.len() {
        return Err(CliError::validation("--names needs one label per report"));
    }
    let mut named = Vec::new();
    for (i, path) in a.reports.iter().enumerate() {
        require_file(path, "report")?;
        let name = a.names.get(i).cloned().unwrap_or_else(|| {
            path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
        });
        named.push((name, MetricReport::load(path)?));
    }
    let table = compare_configs(&named)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(Error::from)?);
    } else {
        print!("{}", table.render_text());
    }
    Ok(())
}

async fn serve(cfg: &Config, a: ServeArgs) -> CmdResult {
    let pipeline = build_pipeline(cfg, &a.retrieval, a.template.as_deref())?;
    let state = Arc::new(AppState {
        pipeline,
        stats_paths: StatsPaths {
            clean: Some(cfg.paths.clean.clone()),
            chunks: Some(a.retrieval.chunks.clone().unwrap_or_else(|| cfg.paths.chunks.clone())),
            qa: Some(cfg.paths.qa.clone()),
        },
    });
    let dev = a.dev || cfg.service.dev;
    let app = service::router(state.clone(), dev.then_some(cfg.service.ui_origin.as_str())).map_err(CliError::validation)?;
    let bind = a.bind.unwrap_or_else(|| cfg.service.bind.clone());
    let listener = tokio::net::TcpListener::bind(&bind).await.map_err(|e| {
        let hint = if e.kind() == std::io::ErrorKind::AddrInUse {
            "; the port is busy, pick another with --bind"
        } else {
            ""
        };
        CliError::validation(format!("cannot listen on {bind}: {e}{hint}"))
    })?;
    let addr = listener.local_addr().map_err(|e| CliError::new(1, e.to_string()))?;
    eprintln!("serving {} chunks on http://{addr}{}", state.pipeline.kb.len(), if dev { " (dev CORS)" } else { "" });
    let _ = std::io::stderr().flush();
    service::serve(listener, app, service::shutdown_signal())
        .await
        .map_err(|e| CliError::new(1, format!("server error: {e}")))
}

fn export(cfg: &Config, a: ExportArgs) -> CmdResult {
    let qa = or_cfg(a.qa, &cfg.paths.qa);
    require_file(&qa, "QA dataset")?;
    let chunks = or_cfg(a.chunks, &cfg.paths.chunks);
    require_file(&chunks, "chunk store")?;
    let pairs = filter_split(read_pairs(&qa)?, a.split);
    let records = export_finetune(&pairs, &read_chunks(&chunks)?)?;
    jsonl::write(&a.out, &records)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}

fn stats(cfg: &Config, a: StatsArgs) -> CmdResult {
    let clean = or_cfg(a.clean, &cfg.paths.clean);
    let chunks = or_cfg(a.chunks, &cfg.paths.chunks);
    let qa = or_cfg(a.qa, &cfg.paths.qa);
    let s = corpus_stats(Some(&clean), Some(&chunks), Some(&qa))?;
    println!("{}", serde_json::to_string_pretty(&s).map_err(Error::from)?);
    Ok(())
}
