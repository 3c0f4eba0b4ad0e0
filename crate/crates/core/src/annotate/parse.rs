use serde_json::Value;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPairs {
    pub pairs: Vec<(String, String)>,
    /// Entries without a non-empty `question` and `answer`.
    pub dropped: usize,
}

/// Extracts `(question, answer)` pairs from a model response.
///
/// Code fences are removed, then the first balanced `[...]` that parses as a
/// JSON array of objects (after dropping trailing commas) is used. Later `[`
/// positions are tried when an earlier candidate is not valid JSON or holds
/// no objects.
pub fn parse_qa_response(raw: &str) -> Result<ParsedPairs> {
    let cleaned = raw.replace("```", "\n");

    let mut fallback: Option<Vec<Value>> = None;
    for (start, _) in cleaned.match_indices('[') {
        let Some(end) = matching_bracket(&cleaned, start) else {
            continue;
        };
        let candidate = &cleaned[start..=end];
        let parsed = serde_json::from_str::<Value>(candidate)
            .or_else(|_| serde_json::from_str::<Value>(&strip_trailing_commas(candidate)));
        if let Ok(Value::Array(items)) = parsed {
            if items.is_empty() || items.iter().any(Value::is_object) {
                return Ok(collect_pairs(&items));
            }
            fallback.get_or_insert(items);
        }
    }
    match fallback {
        Some(items) => Ok(collect_pairs(&items)),
        None => Err(Error::NoArray { raw: raw.to_owned() }),
    }
}

fn collect_pairs(items: &[Value]) -> ParsedPairs {
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for item in items {
        let field = |k: &str| {
            item.get(k)
                .and_then(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
        };
        match (field("question"), field("answer")) {
            (Some(q), Some(a)) => pairs.push((q, a)),
            _ => dropped += 1,
        }
    }
    if pairs.is_empty() && !items.is_empty() {
        tracing::warn!(dropped, "response array held no usable pairs");
    }
    ParsedPairs { pairs, dropped }
}

/// Byte index of the `]` closing the `[` at `start`, skipping string literals.
fn matching_bracket(s: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s[start..].char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + i);
                }
            }
            _ => {}
        }
    }
    None
}

fn strip_trailing_commas(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut escaped = false;
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            out.push(c);
            continue;
        }
        if c == '"' {
            in_str = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|n| !n.is_whitespace());
            if matches!(next, Some(']') | Some('}')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Pairs laid out in the array shape the annotation prompt asks for.
pub fn render_pairs(pairs: &[(String, String)]) -> String {
    let items: Vec<Value> = pairs
        .iter()
        .map(|(q, a)| serde_json::json!({ "question": q, "answer": a }))
        .collect();
    serde_json::to_string_pretty(&items).expect("json values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(raw: &str) -> Vec<(String, String)> {
        parse_qa_response(raw).unwrap().pairs
    }

    fn p(q: &str, a: &str) -> (String, String) {
        (q.into(), a.into())
    }

    #[test]
    fn surrounding_prose_is_ignored() {
        assert_eq!(pairs(r#"Sure! [ {"question":"Q","answer":"A"} ] Done."#), [p("Q", "A")]);
    }

    #[test]
    fn empty_array() {
        let r = parse_qa_response("[]").unwrap();
        assert!(r.pairs.is_empty());
        assert_eq!(r.dropped, 0);
    }

    #[test]
    fn fenced_array() {
        let raw = r#"```[{"question":"Q1","answer":"A1"},{"question":"Q2","answer":"A2"}]```"#;
        assert_eq!(pairs(raw), [p("Q1", "A1"), p("Q2", "A2")]);
        let raw = "```json\n[{\"question\":\"Q1\",\"answer\":\"A1\"}]\n```";
        assert_eq!(pairs(raw), [p("Q1", "A1")]);
    }

    #[test]
    fn brackets_inside_strings() {
        let raw = r#"[{"question":"What is [x]?","answer":"a ] b"}]"#;
        assert_eq!(pairs(raw), [p("What is [x]?", "a ] b")]);
    }

    #[test]
    fn invalid_entries_are_counted() {
        let raw = r#"[{"question":"Q","answer":""},{"question":"Q2"},{"question":"Q3","answer":"A3"},7]"#;
        let r = parse_qa_response(raw).unwrap();
        assert_eq!(r.pairs, [p("Q3", "A3")]);
        assert_eq!(r.dropped, 3);
    }

    #[test]
    fn trailing_commas_are_repaired() {
        let raw = "[\n {\"question\": \"Q\", \"answer\": \"A,\",},\n]";
        assert_eq!(pairs(raw), [p("Q", "A,")]);
    }

    #[test]
    fn skips_unparseable_bracket_groups() {
        let raw = r#"See [1] for details: [{"question":"Q","answer":"A"}]"#;
        assert_eq!(pairs(raw), [p("Q", "A")]);
    }

    #[test]
    fn no_array_keeps_raw_text() {
        match parse_qa_response("I cannot help with that") {
            Err(Error::NoArray { raw }) => assert_eq!(raw, "I cannot help with that"),
            other => panic!("{other:?}"),
        }
        assert!(parse_qa_response("[ unclosed").is_err());
    }

    #[test]
    fn round_trip() {
        let list = vec![p("Q \"one\"", "A\\1"), p("Q2", "A2")];
        assert_eq!(pairs(&render_pairs(&list)), list);
    }
}
