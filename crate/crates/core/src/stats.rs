//! Counts over the on-disk artifacts: clean documents, chunks and QA pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::{read_pairs, Split};
use crate::extract::Category;
use crate::{jsonl, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaCounts {
    pub train: usize,
    pub test: usize,
    pub unsplit: usize,
}

/// `None` marks a store that does not exist.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub html: Option<usize>,
    pub pdf: Option<usize>,
    pub paper: Option<usize>,
    pub chunks: Option<usize>,
    pub qa: Option<QaCounts>,
}

fn count_txt(dir: &Path) -> Result<Option<usize>> {
    if !dir.is_dir() {
        return Ok(None);
    }
    let n = std::fs::read_dir(dir)
        .map_err(|e| crate::Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "txt") && e.path().is_file())
        .count();
    Ok(Some(n))
}

pub fn corpus_stats(clean_dir: Option<&Path>, chunks: Option<&Path>, qa: Option<&Path>) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    if let Some(dir) = clean_dir.filter(|d| d.is_dir()) {
        for cat in Category::ALL {
            let n = count_txt(&dir.join(cat.dir_name()))?.unwrap_or(0);
            match cat {
                Category::Html => stats.html = Some(n),
                Category::Pdf => stats.pdf = Some(n),
                Category::Paper => stats.paper = Some(n),
            }
        }
    }
    if let Some(path) = chunks.filter(|p| p.is_file()) {
        stats.chunks = Some(jsonl::count_records(path)?);
    }
    if let Some(path) = qa.filter(|p| p.is_file()) {
        let mut counts = QaCounts::default();
        for p in read_pairs(path)? {
            match p.split {
                Split::Train => counts.train += 1,
                Split::Test => counts.test += 1,
                Split::Unsplit => counts.unsplit += 1,
            }
        }
        stats.qa = Some(counts);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_stores_are_null() {
        let dir = tempfile::tempdir().unwrap();
        let s = corpus_stats(Some(&dir.path().join("nope")), Some(&dir.path().join("c.jsonl")), None).unwrap();
        assert_eq!(s, CorpusStats::default());
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["html"].is_null() && json["chunks"].is_null());
    }

    #[test]
    fn empty_corpus_is_zero() {
        let dir = tempfile::tempdir().unwrap();
        let chunks = dir.path().join("chunks.jsonl");
        std::fs::write(&chunks, "").unwrap();
        let s = corpus_stats(Some(dir.path()), Some(&chunks), None).unwrap();
        assert_eq!((s.html, s.pdf, s.paper, s.chunks), (Some(0), Some(0), Some(0), Some(0)));
    }
}
