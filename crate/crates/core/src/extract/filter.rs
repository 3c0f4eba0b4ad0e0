use serde::{Deserialize, Serialize};

use super::{Category, CleanDocument};
use crate::{Error, Result};

/// Shipped default keyword list, case variants included.
pub const DEFAULT_KEYWORDS: [&str; 16] = [
    "cmu",
    "carnegie",
    "mellon",
    "university",
    "tartans",
    "scotty",
    "pittsburgh",
    "carnival",
    "CMU",
    "Carnegie",
    "Mellon",
    "University",
    "Tartans",
    "Scotty",
    "Pittsburgh",
    "Carnival",
];

pub const DEFAULT_MIN_CHARS: usize = 200;
pub const ERROR_PAGE_MARKER: &str = "Page_not_found";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Ok,
    NoKeyword,
    TooShort,
    ErrorPage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub kept: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    pub const OK: FilterVerdict = FilterVerdict {
        kept: true,
        reason: FilterReason::Ok,
    };

    pub fn drop(reason: FilterReason) -> Self {
        Self {
            kept: reason == FilterReason::Ok,
            reason,
        }
    }
}

/// Non-empty list of case-sensitive substrings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet(Vec<String>);

impl KeywordSet {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let words: Vec<String> = words.into_iter().filter(|w| !w.is_empty()).collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("keyword list is empty".into()));
        }
        Ok(Self(words))
    }

    /// One keyword per line; blank lines ignored. Lines are not trimmed
    /// beyond the line ending, so a keyword may carry inner spaces.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(|l| l.trim_end_matches('\r').to_owned())
                .filter(|l| !l.trim().is_empty())
                .collect(),
        )
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn matches(&self, haystack: &str) -> bool {
        self.0.iter().any(|k| haystack.contains(k.as_str()))
    }
}

impl Default for KeywordSet {
    fn default() -> Self {
        Self(DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect())
    }
}

/// Plain substring search over title and text. Scholarly papers always pass.
pub fn relevance_filter(doc: &CleanDocument, keywords: &KeywordSet) -> FilterVerdict {
    if doc.category == Category::Paper || keywords.matches(&doc.title) || keywords.matches(&doc.text) {
        FilterVerdict::OK
    } else {
        FilterVerdict::drop(FilterReason::NoKeyword)
    }
}

pub fn quality_filter(doc: &CleanDocument, min_chars: usize) -> FilterVerdict {
    if doc.char_count < min_chars {
        FilterVerdict::drop(FilterReason::TooShort)
    } else if doc.title.contains(ERROR_PAGE_MARKER) {
        FilterVerdict::drop(FilterReason::ErrorPage)
    } else {
        FilterVerdict::OK
    }
}

/// Relevance first, then quality; the first failing rule names the reason.
pub fn apply_filters(doc: &CleanDocument, keywords: &KeywordSet, min_chars: usize) -> FilterVerdict {
    let v = relevance_filter(doc, keywords);
    if !v.kept {
        return v;
    }
    quality_filter(doc, min_chars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(title: &str, text: &str, category: Category) -> CleanDocument {
        CleanDocument::new("http://x/", title.into(), text.into(), category, "html/x/index.html".into())
    }

    #[test]
    fn keyword_in_text_keeps() {
        let kw = KeywordSet::default();
        assert_eq!(relevance_filter(&doc("", "Go tartans!", Category::Html), &kw), FilterVerdict::OK);
    }

    #[test]
    fn missing_keyword_drops() {
        let kw = KeywordSet::default();
        let v = relevance_filter(&doc("", "Welcome to Stanford.", Category::Html), &kw);
        assert_eq!(v, FilterVerdict { kept: false, reason: FilterReason::NoKeyword });
    }

    #[test]
    fn keyword_in_title_keeps() {
        let kw = KeywordSet::default();
        let d = doc("Carnegie Mellon Directory", "Find people and offices.", Category::Pdf);
        assert!(relevance_filter(&d, &kw).kept);
    }

    #[test]
    fn matching_is_case_sensitive_substring() {
        let kw = KeywordSet::new(vec!["cmu".into()]).unwrap();
        assert!(relevance_filter(&doc("", "the cmuseum", Category::Html), &kw).kept);
        assert!(!relevance_filter(&doc("", "CMU", Category::Html), &kw).kept);
    }

    #[test]
    fn papers_bypass_keywords() {
        let kw = KeywordSet::default();
        assert!(relevance_filter(&doc("Attention", "transformers", Category::Paper), &kw).kept);
    }

    #[test]
    fn length_boundary_is_strict() {
        let d150 = doc("t", &"a".repeat(150), Category::Html);
        let d200 = doc("t", &"a".repeat(200), Category::Html);
        let d199 = doc("t", &"é".repeat(199), Category::Html);
        assert_eq!(quality_filter(&d150, 200).reason, FilterReason::TooShort);
        assert_eq!(quality_filter(&d200, 200), FilterVerdict::OK);
        assert_eq!(quality_filter(&d199, 200).reason, FilterReason::TooShort);
    }

    #[test]
    fn error_title_drops_long_pages() {
        let d = doc("Page_not_found", &"x".repeat(5000), Category::Html);
        assert_eq!(quality_filter(&d, 200).reason, FilterReason::ErrorPage);
        let d = doc("CMU | Page_not_found | 404", &"x".repeat(5000), Category::Html);
        assert_eq!(quality_filter(&d, 200).reason, FilterReason::ErrorPage);
    }

    #[test]
    fn relevance_runs_before_quality() {
        let kw = KeywordSet::default();
        let d = doc("", "short", Category::Html);
        assert_eq!(apply_filters(&d, &kw, 200).reason, FilterReason::NoKeyword);
    }

    #[test]
    fn keyword_file_parsing() {
        let kw = KeywordSet::parse("cmu\n\ncarnegie mellon\r\n").unwrap();
        assert_eq!(kw.words(), ["cmu", "carnegie mellon"]);
        assert!(KeywordSet::parse("\n\n").is_err());
    }

    #[test]
    fn default_list_has_sixteen_entries() {
        assert_eq!(KeywordSet::default().words().len(), 16);
        assert!(DEFAULT_KEYWORDS.contains(&"tartans"));
    }
}
