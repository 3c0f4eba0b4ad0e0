//! Raw HTML/PDF to clean text, boilerplate removal and corpus filters.

pub mod filter;
mod html;
mod pdf;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

pub use filter::{
    apply_filters, quality_filter, relevance_filter, FilterReason, FilterVerdict, KeywordSet, DEFAULT_KEYWORDS,
    DEFAULT_MIN_CHARS,
};

use crate::crawl::store::{self, StoredRaw};
use crate::crawl::{canonicalize, links, MediaKind, RawDocument, Source};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Html,
    Pdf,
    Paper,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Html, Category::Pdf, Category::Paper];

    pub fn of(raw: &RawDocument) -> Self {
        match (&raw.source, raw.media_kind) {
            (Source::Scholarly { .. }, _) => Category::Paper,
            (Source::Web, MediaKind::Pdf) => Category::Pdf,
            (Source::Web, MediaKind::Html) => Category::Html,
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            Category::Html => "html",
            Category::Pdf => "pdf",
            Category::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub doc_id: String,
    pub title: String,
    pub text: String,
    pub category: Category,
    /// Corpus-relative path of the raw file this came from.
    pub source_path: String,
    /// Unicode scalar values in `text`.
    pub char_count: usize,
    pub url: String,
    /// The raw bytes were not valid UTF-8 and were decoded lossily.
    #[serde(default)]
    pub lossy_decode: bool,
}

impl CleanDocument {
    pub fn new(url: &str, title: String, text: String, category: Category, source_path: String) -> Self {
        let doc_id = Url::parse(url)
            .map(|u| doc_id_for(&u))
            .unwrap_or_else(|_| short_hash(url));
        Self {
            doc_id,
            title,
            char_count: text.chars().count(),
            text,
            category,
            source_path,
            url: url.to_owned(),
            lossy_decode: false,
        }
    }

    fn set_text(&mut self, text: String) {
        self.char_count = text.chars().count();
        self.text = text;
    }
}

/// First 16 hex digits of SHA-256 over the canonical URL.
pub fn doc_id_for(url: &Url) -> String {
    short_hash(canonicalize(url).as_str())
}

fn short_hash(s: &str) -> String {
    let digest = Sha256::digest(s.as_bytes());
    hex::encode(&digest[..8])
}

pub fn html_to_text(raw: &RawDocument) -> Result<CleanDocument> {
    if raw.media_kind != MediaKind::Html {
        return Err(Error::InvalidInput(format!("{} is not html", raw.url)));
    }
    let (source, lossy) = match std::str::from_utf8(&raw.body) {
        Ok(s) => (std::borrow::Cow::Borrowed(s), false),
        Err(_) => (String::from_utf8_lossy(&raw.body), true),
    };
    let extracted = html::extract(&source);
    let mut doc = CleanDocument::new(
        raw.url.as_str(),
        extracted.title,
        extracted.text,
        Category::of(raw),
        path_string(&store::relative_path(raw)),
    );
    doc.lossy_decode = lossy;
    Ok(doc)
}

/// Page texts joined by form feeds. A document with no extractable glyphs
/// yields empty text rather than a string of separators.
pub fn pdf_to_text(raw: &RawDocument) -> Result<CleanDocument> {
    if raw.media_kind != MediaKind::Pdf {
        return Err(Error::InvalidInput(format!("{} is not a pdf", raw.url)));
    }
    let source_path = path_string(&store::relative_path(raw));
    let extracted = pdf::extract(&raw.body, &source_path)?;
    let text = if extracted.pages.iter().all(|p| p.is_empty()) {
        String::new()
    } else {
        extracted.pages.join("\u{c}")
    };
    let title = extracted.title.unwrap_or_else(|| filename_stem(raw));
    Ok(CleanDocument::new(raw.url.as_str(), title, text, Category::of(raw), source_path))
}

fn filename_stem(raw: &RawDocument) -> String {
    if let Source::Scholarly { paper_id } = &raw.source {
        return paper_id.clone();
    }
    let last = raw
        .url
        .path_segments()
        .and_then(|mut s| s.next_back())
        .unwrap_or("");
    let stem = Path::new(last).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem.is_empty() {
        raw.url.host_str().unwrap_or_default().to_owned()
    } else {
        stem
    }
}

fn path_string(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Dispatches on media kind and records the actual stored path.
pub fn extract(stored: &StoredRaw) -> Result<CleanDocument> {
    let mut doc = match stored.doc.media_kind {
        MediaKind::Html => html_to_text(&stored.doc)?,
        MediaKind::Pdf => pdf_to_text(&stored.doc)?,
    };
    doc.source_path = stored.rel_path.clone();
    Ok(doc)
}

#[derive(Debug, Clone, Copy)]
pub struct BoilerplateOptions {
    /// Fraction of a host's pages a line must appear on to count as boilerplate.
    pub min_page_fraction: f64,
}

impl Default for BoilerplateOptions {
    fn default() -> Self {
        Self { min_page_fraction: 0.3 }
    }
}

/// Removes lines that repeat verbatim on at least two pages and on at least
/// `min_page_fraction` of the pages of the same host. HTML documents only.
/// Returns the number of lines removed.
pub fn strip_repeated_lines(docs: &mut [CleanDocument], opts: BoilerplateOptions) -> usize {
    let mut by_host: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        if d.category != Category::Html {
            continue;
        }
        let host = Url::parse(&d.url).map(|u| links::host_key(&u)).unwrap_or_default();
        by_host.entry(host).or_default().push(i);
    }

    let mut removed = 0;
    for members in by_host.values() {
        let n = members.len();
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for &i in members {
            let distinct: HashSet<&str> = docs[i].text.lines().collect();
            for line in distinct {
                *freq.entry(line).or_default() += 1;
            }
        }
        let boiler: HashSet<String> = freq
            .into_iter()
            .filter(|&(_, f)| f >= 2 && f as f64 >= opts.min_page_fraction * n as f64)
            .map(|(l, _)| l.to_owned())
            .collect();
        if boiler.is_empty() {
            continue;
        }
        for &i in members {
            let before = docs[i].text.lines().count();
            let kept: Vec<&str> = docs[i].text.lines().filter(|l| !boiler.contains(*l)).collect();
            removed += before - kept.len();
            let text = kept.join("\n");
            docs[i].set_text(text);
        }
    }
    removed
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub keywords: KeywordSet,
    pub min_chars: usize,
    pub boilerplate: BoilerplateOptions,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            keywords: KeywordSet::default(),
            min_chars: DEFAULT_MIN_CHARS,
            boilerplate: BoilerplateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestEntry {
    pub source_path: String,
    pub url: String,
    pub category: Category,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<FilterVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub char_count: usize,
    #[serde(default)]
    pub lossy_decode: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub kept: usize,
    pub dropped: BTreeMap<FilterReason, usize>,
    pub errors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub entries: Vec<IngestEntry>,
    pub counts: BTreeMap<Category, CategoryCounts>,
    pub boilerplate_lines_removed: usize,
}

/// Cleaned documents paired with their verdicts, plus the report. Nothing
/// is written to disk.
pub fn clean_corpus(stored: &[StoredRaw], opts: &IngestOptions) -> (Vec<(CleanDocument, FilterVerdict)>, IngestReport) {
    let mut report = IngestReport::default();
    let mut docs = Vec::new();
    for s in stored {
        match extract(s) {
            Ok(d) => docs.push(d),
            Err(e) => {
                let category = Category::of(&s.doc);
                report.counts.entry(category).or_default().errors += 1;
                report.entries.push(IngestEntry {
                    source_path: s.rel_path.clone(),
                    url: s.doc.url.to_string(),
                    category,
                    doc_id: None,
                    verdict: None,
                    error: Some(e.to_string()),
                    char_count: 0,
                    lossy_decode: false,
                });
            }
        }
    }
    report.boilerplate_lines_removed = strip_repeated_lines(&mut docs, opts.boilerplate);

    let mut out = Vec::with_capacity(docs.len());
    for d in docs {
        let verdict = apply_filters(&d, &opts.keywords, opts.min_chars);
        let counts = report.counts.entry(d.category).or_default();
        if verdict.kept {
            counts.kept += 1;
        } else {
            *counts.dropped.entry(verdict.reason).or_default() += 1;
        }
        report.entries.push(IngestEntry {
            source_path: d.source_path.clone(),
            url: d.url.clone(),
            category: d.category,
            doc_id: Some(d.doc_id.clone()),
            verdict: Some(verdict),
            error: None,
            char_count: d.char_count,
            lossy_decode: d.lossy_decode,
        });
        out.push((d, verdict));
    }
    (out, report)
}

#[derive(Debug, Serialize, Deserialize)]
struct CleanMeta {
    doc_id: String,
    title: String,
    category: Category,
    source_path: String,
    url: String,
    char_count: usize,
    verdict: FilterVerdict,
    #[serde(default)]
    lossy_decode: bool,
}

pub const INGEST_REPORT_FILE: &str = "ingest_report.json";

/// Reads the raw corpus at `raw_root`, writes kept documents to
/// `out_dir/{html,pdf,paper}/<doc_id>.txt` with `.meta.json` sidecars and
/// the report to `out_dir/ingest_report.json`.
pub fn ingest(raw_root: &Path, out_dir: &Path, opts: &IngestOptions) -> Result<IngestReport> {
    let stored = store::load_raw_corpus(raw_root)?;
    let (docs, report) = clean_corpus(&stored, opts);
    for (doc, verdict) in docs.iter().filter(|(_, v)| v.kept) {
        write_clean(out_dir, doc, *verdict)?;
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let report_path = out_dir.join(INGEST_REPORT_FILE);
    fs::write(&report_path, serde_json::to_vec_pretty(&report)?).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

pub fn write_clean(out_dir: &Path, doc: &CleanDocument, verdict: FilterVerdict) -> Result<()> {
    let dir = out_dir.join(doc.category.dir_name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let txt = dir.join(format!("{}.txt", doc.doc_id));
    fs::write(&txt, &doc.text).map_err(|e| Error::io(&txt, e))?;
    let meta = CleanMeta {
        doc_id: doc.doc_id.clone(),
        title: doc.title.clone(),
        category: doc.category,
        source_path: doc.source_path.clone(),
        url: doc.url.clone(),
        char_count: doc.char_count,
        verdict,
        lossy_decode: doc.lossy_decode,
    };
    let meta_path = dir.join(format!("{}{}", doc.doc_id, store::META_SUFFIX));
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&meta_path, e))
}

/// Loads `dir/{html,pdf,paper}/*.txt` (with sidecars) sorted by category then doc id.
pub fn load_clean_corpus(dir: &Path) -> Result<Vec<CleanDocument>> {
    let mut out = Vec::new();
    for cat in Category::ALL {
        let sub = dir.join(cat.dir_name());
        if !sub.is_dir() {
            continue;
        }
        let mut names: Vec<_> = fs::read_dir(&sub)
            .map_err(|e| Error::io(&sub, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        names.sort();
        for txt in names {
            let text = fs::read_to_string(&txt).map_err(|e| Error::io(&txt, e))?;
            let stem = txt.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let meta_path = sub.join(format!("{stem}{}", store::META_SUFFIX));
            let meta: Option<CleanMeta> = fs::read(&meta_path).ok().and_then(|b| serde_json::from_slice(&b).ok());
            let doc = match meta {
                Some(m) => CleanDocument {
                    doc_id: m.doc_id,
                    title: m.title,
                    char_count: text.chars().count(),
                    text,
                    category: m.category,
                    source_path: m.source_path,
                    url: m.url,
                    lossy_decode: m.lossy_decode,
                },
                None => CleanDocument {
                    doc_id: stem.clone(),
                    title: String::new(),
                    char_count: text.chars().count(),
                    text,
                    category: cat,
                    source_path: format!("{}/{stem}.txt", cat.dir_name()),
                    url: String::new(),
                    lossy_decode: false,
                },
            };
            out.push(doc);
        }
    }
    Ok(out)
}
