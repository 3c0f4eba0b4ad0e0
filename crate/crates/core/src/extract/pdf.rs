use lopdf::{Document, Object};

use crate::{Error, Result};

pub(crate) struct PdfText {
    pub title: Option<String>,
    /// One entry per page, whitespace-normalized.
    pub pages: Vec<String>,
}

pub(crate) fn extract(bytes: &[u8], path: &str) -> Result<PdfText> {
    let pdf_err = |reason: String| Error::Pdf {
        path: path.to_owned(),
        reason,
    };
    let raw_pages = pdf_extract::extract_text_from_mem_by_pages(bytes).map_err(|e| pdf_err(e.to_string()))?;

    let mut doc = Document::load_mem(bytes).map_err(|e| pdf_err(e.to_string()))?;
    if doc.is_encrypted() {
        doc.decrypt("").map_err(|e| pdf_err(e.to_string()))?;
    }
    // pdf-extract stops at the first unreadable page; a short count means a damaged file
    let page_count = doc.get_pages().len();
    if raw_pages.len() < page_count {
        return Err(pdf_err(format!(
            "text extraction failed on page {} of {page_count}",
            raw_pages.len() + 1
        )));
    }

    let pages = raw_pages
        .iter()
        .map(|p| {
            p.lines()
                .map(super::html::collapse)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect();
    Ok(PdfText {
        title: info_title(&doc),
        pages,
    })
}

fn info_title(doc: &Document) -> Option<String> {
    let info = match doc.trailer.get(b"Info").ok()? {
        Object::Reference(id) => doc.get_dictionary(*id).ok()?,
        Object::Dictionary(d) => d,
        _ => return None,
    };
    let bytes = match info.get(b"Title").ok()? {
        Object::String(bytes, _) => bytes.clone(),
        Object::Reference(id) => match doc.get_object(*id).ok()? {
            Object::String(bytes, _) => bytes.clone(),
            _ => return None,
        },
        _ => return None,
    };
    let title = decode_text_string(&bytes);
    let title = super::html::collapse(&title);
    (!title.is_empty()).then_some(title)
}

/// PDF text strings are UTF-16BE with a BOM or (approximately) Latin-1.
fn decode_text_string(bytes: &[u8]) -> String {
    if let Some(rest) = bytes.strip_prefix(&[0xFE, 0xFF]) {
        let units: Vec<u16> = rest
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        return String::from_utf16_lossy(&units);
    }
    if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        return String::from_utf8_lossy(rest).into_owned();
    }
    bytes.iter().map(|&b| b as char).collect()
}
