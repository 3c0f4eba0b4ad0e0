//! The bundled 20-page fixture site and its hand-traced crawl expectations.
//!
//! Link graph (depth from `index.html`):
//!
//! ```text
//! 0  index
//! 1  about, academics, news, people, events
//!    (+ dead-link.html: 404, admin/panel.html: robots-disallowed)
//! 2  history, campus, programs, courses, navonly, news-2024, stanford,
//!    faculty, stub, carnival, missing
//! 3  archive, phd, lab            (beyond depth 2, never fetched)
//! ```

use std::path::PathBuf;

use crate::server::{FixtureResponse, FixtureServer};

pub const SEED: &str = "index.html";

/// Pages fetched by a depth-2 crawl from [`SEED`].
pub const VISITED_DEPTH_2: [&str; 17] = [
    "index.html",
    "about.html",
    "academics.html",
    "news.html",
    "people.html",
    "events.html",
    "history.html",
    "campus.html",
    "programs.html",
    "courses.html",
    "navonly.html",
    "news-2024.html",
    "stanford.html",
    "faculty.html",
    "stub.html",
    "carnival.html",
    "missing.html",
];

pub const DEAD_LINKS: [&str; 1] = ["dead-link.html"];
pub const ROBOTS_BLOCKED: [&str; 1] = ["admin/panel.html"];
pub const BEYOND_DEPTH_2: [&str; 3] = ["archive.html", "phd.html", "lab.html"];

/// Planted pages the filters must drop, with the expected reason.
pub const JUNK: [(&str, &str); 4] = [
    ("stanford.html", "no_keyword"),
    ("navonly.html", "no_keyword"),
    ("stub.html", "too_short"),
    ("missing.html", "error_page"),
];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn site_dir() -> PathBuf {
    fixtures_dir().join("site")
}

fn content_type(path: &str) -> &'static str {
    match path.rsplit('.').next() {
        Some("html") => "text/html; charset=utf-8",
        Some("pdf") => "application/pdf",
        Some("txt") => "text/plain",
        _ => "application/octet-stream",
    }
}

/// Serves [`site_dir`] as static files.
pub async fn serve_site() -> FixtureServer {
    let root = site_dir();
    FixtureServer::start(move |req| {
        let rel = req.path.trim_start_matches('/');
        if rel.split('/').any(|seg| seg == "..") {
            return FixtureResponse::status(400);
        }
        let rel = if rel.is_empty() { SEED } else { rel };
        match std::fs::read(root.join(rel)) {
            Ok(body) => FixtureResponse::new(200, content_type(rel), body),
            Err(_) => FixtureResponse::status(404),
        }
    })
    .await
}
