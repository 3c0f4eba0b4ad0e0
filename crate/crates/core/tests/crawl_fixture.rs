use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use kbqa_core::crawl::store::{load_raw_corpus, store_raw};
use kbqa_core::crawl::{CrawlPolicy, Crawler, HttpFetcher, SkipReason, DEFAULT_USER_AGENT};
use kbqa_core::extract::{ingest, load_clean_corpus, IngestOptions};
use kbqa_testkit::site;
use url::Url;

fn policy(delay_ms: u64) -> CrawlPolicy {
    CrawlPolicy {
        per_host_delay: Duration::from_millis(delay_ms),
        timeout: Duration::from_secs(5),
        ..CrawlPolicy::default()
    }
}

fn crawler(p: CrawlPolicy) -> Crawler<HttpFetcher> {
    let fetcher = HttpFetcher::new(DEFAULT_USER_AGENT, p.timeout).unwrap();
    Crawler::new(fetcher, p).unwrap()
}

fn rel(server: &kbqa_testkit::FixtureServer, url: &str) -> String {
    url.strip_prefix(&server.base_url()).unwrap().to_owned()
}

#[tokio::test]
async fn depth_two_visits_the_hand_traced_set() {
    let server = site::serve_site().await;
    let seed = Url::parse(&server.url(site::SEED)).unwrap();
    let report = crawler(policy(5)).crawl(&[seed]).await.unwrap();

    let visited: BTreeSet<String> = report.documents.iter().map(|d| rel(&server, d.url.as_str())).collect();
    let expected: BTreeSet<String> = site::VISITED_DEPTH_2.iter().map(|s| s.to_string()).collect();
    assert_eq!(visited, expected);
    assert_eq!(report.documents.len(), 17, "no page fetched twice");

    let failed: Vec<String> = report.failures.iter().map(|f| rel(&server, &f.url)).collect();
    assert_eq!(failed, site::DEAD_LINKS);
    assert!(report.failures[0].reason.contains("404"));

    let skipped: Vec<(String, SkipReason)> = report.skipped.iter().map(|s| (rel(&server, &s.url), s.reason)).collect();
    assert_eq!(skipped, [(site::ROBOTS_BLOCKED[0].to_owned(), SkipReason::Robots)]);
    assert!(!report.truncated);

    // BFS level order
    let depths: Vec<u32> = report.documents.iter().map(|d| d.depth).collect();
    assert!(depths.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(depths.iter().filter(|&&d| d == 1).count(), 5);
    for page in site::BEYOND_DEPTH_2 {
        assert!(!server.requests().iter().any(|r| r.path.ends_with(page)));
    }
}

#[tokio::test]
async fn filters_drop_exactly_the_planted_junk() {
    let server = site::serve_site().await;
    let seed = Url::parse(&server.url(site::SEED)).unwrap();
    let report = crawler(policy(1)).crawl(&[seed]).await.unwrap();

    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    for d in &report.documents {
        store_raw(d, &raw).unwrap();
    }
    assert_eq!(load_raw_corpus(&raw).unwrap().len(), 17);

    let clean = dir.path().join("clean");
    let ingest_report = ingest(&raw, &clean, &IngestOptions::default()).unwrap();
    let dropped: BTreeMap<String, String> = ingest_report
        .entries
        .iter()
        .filter_map(|e| {
            let v = e.verdict?;
            (!v.kept).then(|| (e.url.rsplit('/').next().unwrap().to_owned(), serde_json::to_value(v.reason).unwrap().as_str().unwrap().to_owned()))
        })
        .collect();
    let expected: BTreeMap<String, String> = site::JUNK.iter().map(|(p, r)| (p.to_string(), r.to_string())).collect();
    assert_eq!(dropped, expected);

    let kept = load_clean_corpus(&clean).unwrap();
    assert_eq!(kept.len(), 13);
    assert!(kept.iter().all(|d| d.char_count >= 200));
    assert!(kept.iter().all(|d| !d.text.contains("5000 Forbes Avenue")), "footer text leaked");
}

#[tokio::test]
async fn per_host_delay_spaces_requests() {
    let server = site::serve_site().await;
    let seed = Url::parse(&server.url(site::SEED)).unwrap();
    let mut p = policy(40);
    p.max_depth = 1;
    p.workers = 4;
    crawler(p).crawl(&[seed]).await.unwrap();
    let mut starts: Vec<_> = server.requests().iter().map(|r| r.at).collect();
    starts.sort();
    assert!(starts.len() >= 7);
    for w in starts.windows(2) {
        // the server stamps arrival, a little after the crawler's start slot
        assert!(w[1] - w[0] >= Duration::from_millis(30), "{:?}", w[1] - w[0]);
    }
}

#[tokio::test]
async fn max_pages_truncates() {
    let server = site::serve_site().await;
    let seed = Url::parse(&server.url(site::SEED)).unwrap();
    let mut p = policy(1);
    p.max_pages = 4;
    let report = crawler(p).crawl(&[seed]).await.unwrap();
    assert_eq!(report.documents.len(), 4);
    assert!(report.truncated);
}

#[tokio::test]
async fn robots_can_be_ignored() {
    let server = site::serve_site().await;
    let seed = Url::parse(&server.url(site::SEED)).unwrap();
    let mut p = policy(1);
    p.max_depth = 1;
    p.respect_robots = false;
    let report = crawler(p).crawl(&[seed]).await.unwrap();
    assert!(report.skipped.is_empty());
    let failed: BTreeSet<String> = report.failures.iter().map(|f| rel(&server, &f.url)).collect();
    assert!(failed.contains("admin/panel.html"));
}
