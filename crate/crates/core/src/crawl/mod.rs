//! Corpus acquisition: BFS crawling, scholarly paper retrieval and the raw
//! on-disk layout.

mod fetch;
pub mod links;
pub mod robots;
pub mod scholar;
pub mod store;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tokio::time::Instant;
use url::Url;

pub use fetch::{FetchError, FetchResponse, Fetcher, HttpFetcher};
pub use links::{canonicalize, extract_links};
pub use robots::RobotsRules;

use crate::{Error, Result};

pub const DEFAULT_USER_AGENT: &str = "kbqa-crawler/0.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Html,
    Pdf,
}

impl MediaKind {
    /// `%PDF-` magic wins; otherwise HTML if the declared type says so or the
    /// body opens with markup. Anything else is unsupported.
    pub fn sniff(body: &[u8], content_type: Option<&str>) -> Option<Self> {
        if body.starts_with(b"%PDF-") {
            return Some(MediaKind::Pdf);
        }
        let ct = content_type.unwrap_or("").to_ascii_lowercase();
        if ct.starts_with("text/html") || ct.starts_with("application/xhtml") {
            return Some(MediaKind::Html);
        }
        let head = body
            .strip_prefix(b"\xEF\xBB\xBF".as_slice())
            .unwrap_or(body)
            .iter()
            .skip_while(|b| b.is_ascii_whitespace())
            .take(64)
            .map(|b| b.to_ascii_lowercase())
            .collect::<Vec<u8>>();
        let markup = [&b"<!doctype html"[..], b"<html", b"<head", b"<body", b"<!--"];
        if markup.iter().any(|m| head.starts_with(m)) {
            return Some(MediaKind::Html);
        }
        None
    }
}

/// Where a raw document came from; decides its directory in the raw layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Web,
    Scholarly { paper_id: String },
}

#[derive(Debug, Clone)]
pub struct RawDocument {
    pub url: Url,
    pub fetched_at: DateTime<Utc>,
    pub media_kind: MediaKind,
    pub body: Vec<u8>,
    pub depth: u32,
    pub seed_origin: Url,
    /// Page whose link led here; `None` for seeds and scholarly PDFs.
    pub parent: Option<Url>,
    pub source: Source,
}

#[derive(Debug, Clone)]
pub struct CrawlPolicy {
    pub max_depth: u32,
    pub max_pages: usize,
    pub per_host_delay: Duration,
    pub timeout: Duration,
    pub allowed_schemes: BTreeSet<String>,
    pub user_agent: String,
    /// Concurrent fetches; per-host delay holds regardless.
    pub workers: usize,
    pub respect_robots: bool,
}

impl Default for CrawlPolicy {
    fn default() -> Self {
        Self {
            max_depth: 2,
            max_pages: 10_000,
            per_host_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(20),
            allowed_schemes: ["http", "https"].iter().map(|s| s.to_string()).collect(),
            user_agent: DEFAULT_USER_AGENT.to_owned(),
            workers: 4,
            respect_robots: true,
        }
    }
}

impl CrawlPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_pages < 1 {
            return Err(Error::InvalidInput("max_pages must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        if self.allowed_schemes.is_empty() {
            return Err(Error::InvalidInput("allowed_schemes is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchFailure {
    pub url: String,
    pub depth: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Robots,
    UnsupportedMedia,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub url: String,
    pub depth: u32,
    pub reason: SkipReason,
}

#[derive(Debug, Default)]
pub struct CrawlReport {
    /// BFS level order; within a level, discovery order.
    pub documents: Vec<RawDocument>,
    pub failures: Vec<FetchFailure>,
    pub skipped: Vec<Skipped>,
    /// Set when `max_pages` cut the crawl short.
    pub truncated: bool,
}

/// Serializes request start times per host: consecutive starts on one host
/// are at least `delay` apart no matter how many workers are running.
struct HostGate {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostGate {
    fn new(delay: Duration) -> Self {
        Self {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    async fn wait_turn(&self, host: &str) {
        let start = {
            let mut slots = self.next_slot.lock().await;
            let now = Instant::now();
            let start = slots.get(host).map_or(now, |&t| t.max(now));
            slots.insert(host.to_owned(), start + self.delay);
            start
        };
        tokio::time::sleep_until(start).await;
    }
}

pub struct Crawler<F> {
    fetcher: F,
    policy: CrawlPolicy,
    gate: HostGate,
    robots: Mutex<HashMap<String, Arc<RobotsRules>>>,
}

enum Outcome {
    Page(RawDocument, Url),
    Failed(FetchFailure),
    Skipped(Skipped),
}

impl<F: Fetcher> Crawler<F> {
    pub fn new(fetcher: F, policy: CrawlPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            gate: HostGate::new(policy.per_host_delay),
            fetcher,
            policy,
            robots: Mutex::new(HashMap::new()),
        })
    }

    pub fn policy(&self) -> &CrawlPolicy {
        &self.policy
    }

    /// Breadth-first crawl. Depth counts from each seed; a page is fetched at
    /// most once per crawl, keyed by canonical URL.
    pub async fn crawl(&self, seeds: &[Url]) -> Result<CrawlReport> {
        let mut seen = HashSet::new();
        let mut frontier: Vec<(Url, Url, Option<Url>)> = Vec::new();
        for seed in seeds {
            if !self.policy.allowed_schemes.contains(seed.scheme()) || seed.cannot_be_a_base() {
                return Err(Error::InvalidInput(format!("seed is not an absolute http(s) URL: {seed}")));
            }
            let seed = canonicalize(seed);
            if seen.insert(seed.as_str().to_owned()) {
                frontier.push((seed.clone(), seed, None));
            }
        }

        let mut report = CrawlReport::default();
        'levels: for depth in 0..=self.policy.max_depth {
            if frontier.is_empty() {
                break;
            }
            let mut next = Vec::new();
            let mut pos = 0;
            while pos < frontier.len() {
                let budget = self.policy.max_pages - report.documents.len();
                if budget == 0 {
                    report.truncated = true;
                    break 'levels;
                }
                let end = (pos + self.policy.workers.min(budget)).min(frontier.len());
                let batch = &frontier[pos..end];
                let outcomes = join_all(
                    batch
                        .iter()
                        .map(|(url, origin, parent)| self.visit(url, origin, parent.as_ref(), depth)),
                )
                .await;
                for outcome in outcomes {
                    match outcome {
                        Outcome::Page(doc, base) => {
                            if depth < self.policy.max_depth && doc.media_kind == MediaKind::Html {
                                for link in extract_links(&doc.body, &base, &self.policy.allowed_schemes) {
                                    if seen.insert(link.as_str().to_owned()) {
                                        next.push((link, doc.seed_origin.clone(), Some(doc.url.clone())));
                                    }
                                }
                            }
                            report.documents.push(doc);
                        }
                        Outcome::Failed(f) => {
                            tracing::warn!(url = %f.url, reason = %f.reason, "fetch failed");
                            report.failures.push(f);
                        }
                        Outcome::Skipped(s) => report.skipped.push(s),
                    }
                }
                pos = end;
            }
            frontier = next;
        }
        if !frontier.is_empty() && report.documents.len() >= self.policy.max_pages {
            report.truncated = true;
        }
        Ok(report)
    }

    async fn visit(&self, url: &Url, origin: &Url, parent: Option<&Url>, depth: u32) -> Outcome {
        let failed = |reason: String| {
            Outcome::Failed(FetchFailure {
                url: url.to_string(),
                depth,
                reason,
            })
        };
        let skipped = |reason| {
            Outcome::Skipped(Skipped {
                url: url.to_string(),
                depth,
                reason,
            })
        };

        if self.policy.respect_robots && !self.robots_for(url).await.is_allowed(&path_and_query(url)) {
            return skipped(SkipReason::Robots);
        }

        self.gate.wait_turn(&links::host_key(url)).await;
        let resp = match self.fetcher.get(url).await {
            Ok(r) => r,
            Err(e) => return failed(e.0),
        };
        if !resp.is_success() {
            return failed(format!("HTTP {}", resp.status));
        }
        let Some(media_kind) = MediaKind::sniff(&resp.body, resp.content_type.as_deref()) else {
            return skipped(SkipReason::UnsupportedMedia);
        };
        let doc = RawDocument {
            url: url.clone(),
            fetched_at: Utc::now(),
            media_kind,
            body: resp.body,
            depth,
            seed_origin: origin.clone(),
            parent: parent.cloned(),
            source: Source::Web,
        };
        Outcome::Page(doc, canonicalize(&resp.final_url))
    }

    async fn robots_for(&self, url: &Url) -> Arc<RobotsRules> {
        let host = links::host_key(url);
        if let Some(r) = self.robots.lock().await.get(&host) {
            return r.clone();
        }
        let mut robots_url = url.clone();
        robots_url.set_path("/robots.txt");
        robots_url.set_query(None);
        robots_url.set_fragment(None);
        self.gate.wait_turn(&host).await;
        let rules = match self.fetcher.get(&robots_url).await {
            Ok(resp) if resp.is_success() => {
                RobotsRules::parse(&String::from_utf8_lossy(&resp.body), &self.policy.user_agent)
            }
            _ => RobotsRules::allow_all(),
        };
        let rules = Arc::new(rules);
        // concurrent workers may race here; both computed the same rules
        self.robots.lock().await.entry(host).or_insert(rules).clone()
    }
}

fn path_and_query(url: &Url) -> String {
    match url.query() {
        Some(q) => format!("{}?{q}", url.path()),
        None => url.path().to_owned(),
    }
}

/// Seed file: one absolute URL per line, `#` starts a comment.
pub fn parse_seed_list(text: &str) -> Result<Vec<Url>> {
    non_comment_lines(text)
        .map(|(n, line)| {
            links::parse_absolute(line)
                .map_err(|e| Error::InvalidInput(format!("line {n}: {line}: {e}")))
        })
        .collect()
}

/// Non-empty lines with `#` comments removed, paired with 1-based line numbers.
pub fn non_comment_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}
