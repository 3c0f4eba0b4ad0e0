//! Raw corpus layout:
//!
//! ```text
//! <root>/html/<host>/<path...>.html   crawled HTML pages
//! <root>/pdf/<host>/<path...>.pdf     PDFs found while crawling
//! <root>/paper/<paper id>.pdf         scholarly papers
//! <root>/sample/...                   manually tagged subset
//! ```
//!
//! Every stored file `<stem>.<ext>` has a `<stem>.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;
use walkdir::WalkDir;

use super::{MediaKind, RawDocument, Source};
use crate::{Error, Result};

pub const HTML_DIR: &str = "html";
pub const PDF_DIR: &str = "pdf";
pub const PAPER_DIR: &str = "paper";
pub const SAMPLE_DIR: &str = "sample";
pub const META_SUFFIX: &str = ".meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMeta {
    pub url: String,
    pub fetched_at: DateTime<Utc>,
    pub depth: u32,
    pub seed_origin: String,
}

/// A stored raw file read back from disk.
#[derive(Debug, Clone)]
pub struct StoredRaw {
    /// Path relative to the corpus root, `/`-separated.
    pub rel_path: String,
    pub doc: RawDocument,
}

fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'.' | b'_' | b'-' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    // a lone "." or ".." would escape the directory
    if out.chars().all(|c| c == '.') {
        out = out.replace('.', "%2E");
    }
    out
}

/// Directory-relative location for a document before collision handling,
/// e.g. `http://x/a/b` becomes `html/x/a/b.html`.
pub fn relative_path(doc: &RawDocument) -> PathBuf {
    match &doc.source {
        Source::Scholarly { paper_id } => {
            PathBuf::from(PAPER_DIR).join(format!("{}.pdf", encode_component(paper_id)))
        }
        Source::Web => web_relative_path(&doc.url, doc.media_kind),
    }
}

fn web_relative_path(url: &Url, kind: MediaKind) -> PathBuf {
    let (dir, ext) = match kind {
        MediaKind::Html => (HTML_DIR, ".html"),
        MediaKind::Pdf => (PDF_DIR, ".pdf"),
    };
    let mut path = PathBuf::from(dir);
    path.push(encode_component(&super::links::host_key(url)));

    let segments: Vec<&str> = url.path_segments().map(|s| s.collect()).unwrap_or_default();
    let (last, parents) = segments.split_last().unwrap_or((&"", &[]));
    for seg in parents.iter().filter(|s| !s.is_empty()) {
        path.push(encode_component(seg));
    }
    let mut name = if last.is_empty() { "index".to_owned() } else { encode_component(last) };
    if let Some(q) = url.query() {
        name.push_str(&encode_component(&format!("?{q}")));
    }
    if !name.to_ascii_lowercase().ends_with(ext) {
        name.push_str(ext);
    }
    path.push(name);
    path
}

/// `dir/b.html` -> `dir/b.meta.json`.
pub fn sidecar_path(file: &Path) -> PathBuf {
    let stem = file.file_stem().unwrap_or_default().to_string_lossy();
    file.with_file_name(format!("{stem}{META_SUFFIX}"))
}

fn with_suffix(path: &Path, n: usize) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    match path.extension() {
        Some(ext) => path.with_file_name(format!("{stem}-{n}.{}", ext.to_string_lossy())),
        None => path.with_file_name(format!("{stem}-{n}")),
    }
}

fn read_meta(path: &Path) -> Option<RawMeta> {
    let bytes = fs::read(path).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// Writes `doc` and its sidecar under `root`; returns the path relative to root.
///
/// If the target already holds a different URL, `-1`, `-2`, ... is appended
/// to the stem. Re-storing the same URL overwrites in place.
pub fn store_raw(doc: &RawDocument, root: &Path) -> Result<PathBuf> {
    let base = relative_path(doc);
    let mut rel = base.clone();
    let mut n = 0;
    loop {
        let abs = root.join(&rel);
        match read_meta(&sidecar_path(&abs)) {
            Some(meta) if meta.url != doc.url.as_str() => {
                n += 1;
                rel = with_suffix(&base, n);
            }
            _ if abs.exists() && !sidecar_path(&abs).exists() => {
                n += 1;
                rel = with_suffix(&base, n);
            }
            _ => break,
        }
    }

    let abs = root.join(&rel);
    if let Some(parent) = abs.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&abs, &doc.body).map_err(|e| Error::io(&abs, e))?;
    let meta = RawMeta {
        url: doc.url.to_string(),
        fetched_at: doc.fetched_at,
        depth: doc.depth,
        seed_origin: doc.seed_origin.to_string(),
    };
    let side = sidecar_path(&abs);
    fs::write(&side, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&side, e))?;
    Ok(rel)
}

/// Loads every stored document under `root/{html,pdf,paper}` in path order.
pub fn load_raw_corpus(root: &Path) -> Result<Vec<StoredRaw>> {
    let mut out = Vec::new();
    for dir in [HTML_DIR, PDF_DIR, PAPER_DIR] {
        let base = root.join(dir);
        if !base.is_dir() {
            continue;
        }
        for entry in WalkDir::new(&base).sort_by_file_name() {
            let entry = entry.map_err(|e| Error::io(&base, e.into()))?;
            let path = entry.path();
            let name = entry.file_name().to_string_lossy();
            if !entry.file_type().is_file() || name.ends_with(META_SUFFIX) {
                continue;
            }
            let side = sidecar_path(path);
            let Some(meta) = read_meta(&side) else {
                tracing::warn!(path = %path.display(), "no sidecar metadata, skipping");
                continue;
            };
            let body = fs::read(path).map_err(|e| Error::io(path, e))?;
            let url = Url::parse(&meta.url)
                .map_err(|e| Error::InvalidInput(format!("{}: bad url: {e}", side.display())))?;
            let seed_origin = Url::parse(&meta.seed_origin).unwrap_or_else(|_| url.clone());
            let media_kind = if dir == HTML_DIR { MediaKind::Html } else { MediaKind::Pdf };
            let source = if dir == PAPER_DIR {
                Source::Scholarly {
                    paper_id: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                }
            } else {
                Source::Web
            };
            let rel_path = path
                .strip_prefix(root)
                .unwrap_or(path)
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push(StoredRaw {
                rel_path,
                doc: RawDocument {
                    url,
                    fetched_at: meta.fetched_at,
                    media_kind,
                    body,
                    depth: meta.depth,
                    seed_origin,
                    parent: None,
                    source,
                },
            });
        }
    }
    Ok(out)
}

/// Copies the stored files (and sidecars) of the listed URLs into
/// `root/sample/`, keeping their relative layout. Returns how many matched.
pub fn tag_sample(root: &Path, urls: &[Url]) -> Result<usize> {
    let wanted: std::collections::HashSet<String> =
        urls.iter().map(|u| super::canonicalize(u).to_string()).collect();
    let mut n = 0;
    for stored in load_raw_corpus(root)? {
        if !wanted.contains(stored.doc.url.as_str()) {
            continue;
        }
        let src = root.join(&stored.rel_path);
        let dst = root.join(SAMPLE_DIR).join(&stored.rel_path);
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
        let side = sidecar_path(&src);
        let side_dst = sidecar_path(&dst);
        fs::copy(&side, &side_dst).map_err(|e| Error::io(&side, e))?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(url: &str, kind: MediaKind) -> RawDocument {
        let url = Url::parse(url).unwrap();
        RawDocument {
            seed_origin: url.clone(),
            url,
            fetched_at: DateTime::parse_from_rfc3339("2024-03-01T12:00:00Z").unwrap().with_timezone(&Utc),
            media_kind: kind,
            body: b"<html>x</html>".to_vec(),
            depth: 1,
            parent: None,
            source: Source::Web,
        }
    }

    #[test]
    fn naming_function() {
        let cases = [
            ("http://x/a/b", MediaKind::Html, "html/x/a/b.html"),
            ("http://x/", MediaKind::Html, "html/x/index.html"),
            ("http://x/a/", MediaKind::Html, "html/x/a/index.html"),
            ("http://x/a/page.html", MediaKind::Html, "html/x/a/page.html"),
            ("http://x/s?q=1", MediaKind::Html, "html/x/s%3Fq%3D1.html"),
            ("http://x:8080/r%20s", MediaKind::Html, "html/x%3A8080/r%2520s.html"),
            ("https://x/docs/cal.pdf", MediaKind::Pdf, "pdf/x/docs/cal.pdf"),
            ("https://x/docs/get", MediaKind::Pdf, "pdf/x/docs/get.pdf"),
        ];
        for (url, kind, want) in cases {
            assert_eq!(relative_path(&doc(url, kind)), PathBuf::from(want), "{url}");
        }
    }

    #[test]
    fn scholarly_papers_go_to_paper_dir() {
        let mut d = doc("https://arxiv.org/pdf/2401.00001", MediaKind::Pdf);
        d.source = Source::Scholarly { paper_id: "abc123".into() };
        assert_eq!(relative_path(&d), PathBuf::from("paper/abc123.pdf"));
    }

    #[test]
    fn writes_file_and_sidecar() {
        let root = tempfile::tempdir().unwrap();
        let d = doc("http://x/a/b", MediaKind::Html);
        let rel = store_raw(&d, root.path()).unwrap();
        assert_eq!(rel, PathBuf::from("html/x/a/b.html"));
        let meta: serde_json::Value =
            serde_json::from_slice(&fs::read(root.path().join("html/x/a/b.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["url"], "http://x/a/b");
        assert_eq!(meta["depth"], 1);
        assert_eq!(meta["fetched_at"], "2024-03-01T12:00:00Z");
        assert_eq!(meta["seed_origin"], "http://x/a/b");
    }

    #[test]
    fn collision_gets_numeric_suffix_and_restore_is_idempotent() {
        let root = tempfile::tempdir().unwrap();
        let a = doc("http://x/a/b", MediaKind::Html);
        let b = doc("http://x/a/b.html", MediaKind::Html);
        assert_eq!(store_raw(&a, root.path()).unwrap(), PathBuf::from("html/x/a/b.html"));
        assert_eq!(store_raw(&b, root.path()).unwrap(), PathBuf::from("html/x/a/b-1.html"));
        assert_eq!(store_raw(&a, root.path()).unwrap(), PathBuf::from("html/x/a/b.html"));
        assert_eq!(store_raw(&b, root.path()).unwrap(), PathBuf::from("html/x/a/b-1.html"));
        assert!(root.path().join("html/x/a/b-1.meta.json").exists());
    }

    #[test]
    fn write_failure_names_the_path() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join("html"), b"not a dir").unwrap();
        let err = store_raw(&doc("http://x/a", MediaKind::Html), root.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("html"));
    }

    #[test]
    fn load_round_trips_and_samples() {
        let root = tempfile::tempdir().unwrap();
        store_raw(&doc("http://x/a/b", MediaKind::Html), root.path()).unwrap();
        store_raw(&doc("http://x/c.pdf", MediaKind::Pdf), root.path()).unwrap();
        let loaded = load_raw_corpus(root.path()).unwrap();
        let paths: Vec<_> = loaded.iter().map(|s| s.rel_path.as_str()).collect();
        assert_eq!(paths, ["html/x/a/b.html", "pdf/x/c.pdf"]);
        assert_eq!(loaded[1].doc.media_kind, MediaKind::Pdf);

        let n = tag_sample(root.path(), &[Url::parse("http://x/a/b").unwrap()]).unwrap();
        assert_eq!(n, 1);
        assert!(root.path().join("sample/html/x/a/b.html").exists());
        assert!(root.path().join("sample/html/x/a/b.meta.json").exists());
    }
}
