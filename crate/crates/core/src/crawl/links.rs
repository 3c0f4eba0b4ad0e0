//! URL canonicalization and anchor extraction.

use std::collections::{BTreeSet, HashSet};

use scraper::{Html, Selector};
use url::Url;

/// Canonical form used for deduplication.
///
/// Scheme and host are lowercased by the parser itself. On top of that the
/// fragment is removed and an empty query (`/b?`) collapses to no query.
pub fn canonicalize(url: &Url) -> Url {
    let mut url = url.clone();
    url.set_fragment(None);
    if url.query() == Some("") {
        url.set_query(None);
    }
    url
}

/// Parses and canonicalizes, rejecting relative references.
pub fn parse_absolute(s: &str) -> Result<Url, url::ParseError> {
    Url::parse(s.trim()).map(|u| canonicalize(&u))
}

/// All anchor targets in `body`, resolved against `base`, canonicalized and
/// deduplicated in document order. Only schemes in `allowed_schemes` survive.
///
/// A `<base href>` element, when present, replaces `base` for resolution.
pub fn extract_links(body: &[u8], base: &Url, allowed_schemes: &BTreeSet<String>) -> Vec<Url> {
    let html = Html::parse_document(&String::from_utf8_lossy(body));
    let anchors = Selector::parse("a[href], area[href]").expect("static selector");
    let base_sel = Selector::parse("base[href]").expect("static selector");

    let base = html
        .select(&base_sel)
        .next()
        .and_then(|el| el.value().attr("href"))
        .and_then(|href| base.join(href.trim()).ok())
        .unwrap_or_else(|| base.clone());

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for el in html.select(&anchors) {
        let Some(href) = el.value().attr("href") else {
            continue;
        };
        let href = href.trim();
        if href.is_empty() || href.starts_with('#') {
            continue;
        }
        let Ok(resolved) = base.join(href) else {
            continue;
        };
        if !allowed_schemes.contains(resolved.scheme()) {
            continue;
        }
        let canon = canonicalize(&resolved);
        if seen.insert(canon.as_str().to_owned()) {
            out.push(canon);
        }
    }
    out
}

/// `host[:port]` key used for politeness and robots caching.
pub fn host_key(url: &Url) -> String {
    match (url.host_str(), url.port()) {
        (Some(h), Some(p)) => format!("{h}:{p}"),
        (Some(h), None) => h.to_owned(),
        (None, _) => String::new(),
    }
}
