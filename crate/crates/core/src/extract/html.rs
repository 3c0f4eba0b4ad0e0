use ego_tree::iter::Edge;
use scraper::{Html, Node, Selector};

/// Subtrees whose text never reaches the output.
const SKIPPED: &[&str] = &[
    "script", "style", "noscript", "template", "head", "nav", "header", "footer", "iframe", "svg",
];

const BLOCKS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "details", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "hr", "html", "li", "main", "ol", "p", "pre", "section", "summary", "table", "tbody", "td",
    "tfoot", "th", "thead", "tr", "ul",
];

pub(crate) struct HtmlText {
    pub title: String,
    pub text: String,
}

/// Paragraph-per-line plain text. Whitespace inside a line is collapsed; blank
/// lines are dropped.
pub(crate) fn extract(source: &str) -> HtmlText {
    let html = Html::parse_document(source);
    let title_sel = Selector::parse("title").expect("static selector");
    let title = html
        .select(&title_sel)
        .next()
        .map(|t| collapse(&t.text().collect::<String>()))
        .unwrap_or_default();

    let mut lines = Vec::new();
    let mut line = String::new();
    let mut skip_depth = 0usize;

    for edge in html.tree.root().traverse() {
        match edge {
            Edge::Open(node) => match node.value() {
                Node::Element(el) => {
                    let name = el.name();
                    if skip_depth > 0 || SKIPPED.contains(&name) {
                        skip_depth += 1;
                    } else if BLOCKS.contains(&name) {
                        flush(&mut line, &mut lines);
                    }
                }
                Node::Text(t) if skip_depth == 0 => line.push_str(t),
                _ => {}
            },
            Edge::Close(node) => {
                if let Node::Element(el) = node.value() {
                    if skip_depth > 0 {
                        skip_depth -= 1;
                    } else if BLOCKS.contains(&el.name()) {
                        flush(&mut line, &mut lines);
                    }
                }
            }
        }
    }
    flush(&mut line, &mut lines);

    HtmlText {
        title,
        text: lines.join("\n"),
    }
}

fn flush(line: &mut String, lines: &mut Vec<String>) {
    let collapsed = defuse_tags(&collapse(line));
    if !collapsed.is_empty() {
        lines.push(collapsed);
    }
    line.clear();
}

pub(crate) fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Decoded entities like `&lt;b` would look like a tag again; keep a space
/// between `<` and a following letter.
fn defuse_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '<' && chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
            out.push(' ');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_script_and_takes_title() {
        let t = extract("<html><head><script>x</script><title>T</title></head><body><p>hi</p></body>");
        assert_eq!(t.title, "T");
        assert_eq!(t.text, "hi");
    }

    #[test]
    fn blocks_become_lines_and_inline_runs_join() {
        let t = extract("<body><h1>Head  line</h1><p>one <b>bold</b>\n   two</p><ul><li>a</li><li>b</li></ul>x<br>y</body>");
        assert_eq!(t.text, "Head line\none bold two\na\nb\nx\ny");
    }

    #[test]
    fn drops_navigation_regions_and_styles() {
        let t = extract(
            "<body><header>Site</header><nav><a href=/>Home</a></nav><style>p{}</style>\
             <main><p>content</p></main><footer>(c) x</footer></body>",
        );
        assert_eq!(t.text, "content");
    }

    #[test]
    fn empty_body_gives_empty_text() {
        let t = extract("<html><body></body></html>");
        assert_eq!(t.text, "");
        assert_eq!(t.title, "");
    }

    #[test]
    fn entity_decoded_angle_brackets_are_defused() {
        let t = extract("<p>if a &lt;b and 3 &lt; 4</p>");
        assert_eq!(t.text, "if a < b and 3 < 4");
    }
}
