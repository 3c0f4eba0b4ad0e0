//! Scholarly paper retrieval against a Semantic Scholar style search API.
//!
//! Request: `GET {base}/graph/v1/paper/search?query=<author>&year=<year>&fields=...&offset=<n>&limit=<n>`
//!
//! Response:
//! ```json
//! {"total": 2, "offset": 0, "next": 100,
//!  "data": [{"paperId": "...", "title": "...", "year": 2023,
//!            "authors": [{"name": "..."}], "isOpenAccess": true,
//!            "openAccessPdf": {"url": "https://..."} }]}
//! ```
//! `next` is absent on the last page; `openAccessPdf` may be null.

use std::collections::HashSet;
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use url::Url;

use super::{MediaKind, RawDocument, Source};
use crate::{Error, Result};

pub const DEFAULT_API_BASE: &str = "https://api.semanticscholar.org";
const FIELDS: &str = "paperId,title,year,authors,isOpenAccess,openAccessPdf";
const PAGE_SIZE: usize = 100;

#[derive(Debug, Clone)]
pub struct ScholarQuery {
    pub author_names: Vec<String>,
    pub year: i32,
    pub open_access_only: bool,
}

impl ScholarQuery {
    pub fn validate(&self) -> Result<()> {
        if self.author_names.iter().all(|a| a.trim().is_empty()) {
            return Err(Error::InvalidInput("author list is empty".into()));
        }
        if !(1000..=9999).contains(&self.year) {
            return Err(Error::InvalidInput(format!("year {} is not a 4-digit year", self.year)));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct SearchPage {
    #[serde(default)]
    next: Option<usize>,
    #[serde(default)]
    data: Vec<PaperRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PaperRecord {
    paper_id: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    year: Option<i32>,
    #[serde(default)]
    authors: Vec<AuthorRecord>,
    #[serde(default)]
    is_open_access: Option<bool>,
    #[serde(default)]
    open_access_pdf: Option<OpenAccessPdf>,
}

#[derive(Debug, Deserialize)]
struct AuthorRecord {
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
struct OpenAccessPdf {
    #[serde(default)]
    url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedPaper {
    pub paper_id: String,
    pub title: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct PaperFetchReport {
    pub documents: Vec<RawDocument>,
    pub skipped: Vec<SkippedPaper>,
}

pub struct ScholarClient {
    base: Url,
    http: reqwest::Client,
    api_key: Option<String>,
    max_retries: u32,
    backoff: Duration,
}

impl ScholarClient {
    pub fn new(base: Url, timeout: Duration) -> Result<Self> {
        let http = reqwest::Client::builder()
            .user_agent(super::DEFAULT_USER_AGENT)
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Http(e.to_string()))?;
        Ok(Self {
            base,
            http,
            api_key: None,
            max_retries: 5,
            backoff: Duration::from_secs(1),
        })
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    /// Retries on HTTP 429 wait `backoff * 2^attempt`, at most `max_retries` times.
    pub fn with_retry(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn search_url(&self, author: &str, year: i32, offset: usize) -> Result<Url> {
        let mut url = self
            .base
            .join("graph/v1/paper/search")
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        url.query_pairs_mut()
            .append_pair("query", author)
            .append_pair("year", &year.to_string())
            .append_pair("fields", FIELDS)
            .append_pair("offset", &offset.to_string())
            .append_pair("limit", &PAGE_SIZE.to_string());
        Ok(url)
    }

    async fn get_with_backoff(&self, url: &Url) -> Result<reqwest::Response> {
        let mut attempt = 0;
        loop {
            let mut req = self.http.get(url.clone());
            if let Some(key) = &self.api_key {
                req = req.header("x-api-key", key);
            }
            let resp = req.send().await.map_err(|e| Error::Http(format!("{url}: {e}")))?;
            if resp.status().as_u16() != 429 {
                return Ok(resp);
            }
            if attempt >= self.max_retries {
                return Err(Error::Http(format!(
                    "{url}: still rate limited after {} retries",
                    self.max_retries
                )));
            }
            let wait = self.backoff * 2u32.saturating_pow(attempt);
            tracing::info!(?wait, attempt, "rate limited, backing off");
            tokio::time::sleep(wait).await;
            attempt += 1;
        }
    }

    /// Papers by any listed author in `query.year`, downloaded as PDFs.
    /// Papers without a reachable open-access PDF land in the skip report.
    pub async fn fetch_papers(&self, query: &ScholarQuery) -> Result<PaperFetchReport> {
        query.validate()?;
        let mut report = PaperFetchReport::default();
        let mut seen = HashSet::new();

        for author in query.author_names.iter().map(|a| a.trim()).filter(|a| !a.is_empty()) {
            let wanted = author.to_lowercase();
            let mut offset = 0;
            loop {
                let url = self.search_url(author, query.year, offset)?;
                let resp = self.get_with_backoff(&url).await?;
                if !resp.status().is_success() {
                    return Err(Error::Http(format!("{url}: HTTP {}", resp.status())));
                }
                let page: SearchPage = resp
                    .json()
                    .await
                    .map_err(|e| Error::Http(format!("{url}: bad search response: {e}")))?;

                for paper in page.data {
                    let by_author = paper
                        .authors
                        .iter()
                        .filter_map(|a| a.name.as_deref())
                        .any(|n| n.trim().to_lowercase() == wanted);
                    if !by_author || paper.year != Some(query.year) || !seen.insert(paper.paper_id.clone()) {
                        continue;
                    }
                    if query.open_access_only && paper.is_open_access == Some(false) {
                        report.skipped.push(SkippedPaper {
                            paper_id: paper.paper_id,
                            title: paper.title.unwrap_or_default(),
                            reason: "not open access".into(),
                        });
                        continue;
                    }
                    self.download(paper, &url, &mut report).await;
                }

                match page.next {
                    Some(next) if next > offset => offset = next,
                    _ => break,
                }
            }
        }
        Ok(report)
    }

    async fn download(&self, paper: PaperRecord, query_url: &Url, report: &mut PaperFetchReport) {
        let title = paper.title.clone().unwrap_or_default();
        let skip = |reason: String| SkippedPaper {
            paper_id: paper.paper_id.clone(),
            title: title.clone(),
            reason,
        };
        let Some(pdf_url) = paper
            .open_access_pdf
            .as_ref()
            .and_then(|p| p.url.as_deref())
            .filter(|u| !u.is_empty())
        else {
            report.skipped.push(skip("no open-access pdf".into()));
            return;
        };
        let Ok(pdf_url) = Url::parse(pdf_url) else {
            report.skipped.push(skip(format!("bad pdf url {pdf_url}")));
            return;
        };
        let body = match self.get_with_backoff(&pdf_url).await {
            Ok(resp) if resp.status().is_success() => match resp.bytes().await {
                Ok(b) => b.to_vec(),
                Err(e) => {
                    report.skipped.push(skip(format!("download failed: {e}")));
                    return;
                }
            },
            Ok(resp) => {
                report.skipped.push(skip(format!("download failed: HTTP {}", resp.status())));
                return;
            }
            Err(e) => {
                report.skipped.push(skip(format!("download failed: {e}")));
                return;
            }
        };
        if MediaKind::sniff(&body, None) != Some(MediaKind::Pdf) {
            report.skipped.push(skip("download is not a pdf".into()));
            return;
        }
        report.documents.push(RawDocument {
            url: pdf_url,
            fetched_at: Utc::now(),
            media_kind: MediaKind::Pdf,
            body,
            depth: 0,
            seed_origin: query_url.clone(),
            parent: None,
            source: Source::Scholarly {
                paper_id: paper.paper_id,
            },
        });
    }
}

/// Author file: one name per line, `#` comments.
pub fn parse_author_list(text: &str) -> Vec<String> {
    super::non_comment_lines(text).map(|(_, l)| l.to_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_author_list_is_rejected() {
        let q = ScholarQuery {
            author_names: vec![],
            year: 2023,
            open_access_only: true,
        };
        assert!(matches!(q.validate(), Err(Error::InvalidInput(_))));
        let q = ScholarQuery {
            author_names: vec!["  ".into()],
            ..q
        };
        assert!(q.validate().is_err());
    }

    #[test]
    fn year_must_have_four_digits() {
        let q = ScholarQuery {
            author_names: vec!["A".into()],
            year: 23,
            open_access_only: true,
        };
        assert!(q.validate().is_err());
    }

    #[test]
    fn author_file_parsing() {
        assert_eq!(parse_author_list("# faculty\nAda Lovelace\n\nAlan Turing # ACM\n"), ["Ada Lovelace", "Alan Turing"]);
    }

    #[test]
    fn search_url_shape() {
        let c = ScholarClient::new(Url::parse("http://127.0.0.1:9/").unwrap(), Duration::from_secs(1)).unwrap();
        let u = c.search_url("Ada Lovelace", 2023, 0).unwrap();
        assert_eq!(u.path(), "/graph/v1/paper/search");
        let q: std::collections::HashMap<_, _> = u.query_pairs().into_owned().collect();
        assert_eq!(q["query"], "Ada Lovelace");
        assert_eq!(q["year"], "2023");
        assert!(q["fields"].contains("openAccessPdf"));
    }
}
