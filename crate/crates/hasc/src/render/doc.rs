// SPDX-License-Identifier: Apache-2.0

//! A small document tree with Markdown and HTML writers. All card text goes
//! through the writers' escaping; nothing is emitted raw.

use std::fmt::Write;

#[derive(Debug, Clone)]
pub(crate) enum Inline {
    Text(String),
    Code(String),
    Link { label: String, url: String },
}

pub(crate) type Line = Vec<Inline>;

pub(crate) fn text(s: impl Into<String>) -> Line {
    vec![Inline::Text(s.into())]
}

pub(crate) fn code(s: impl Into<String>) -> Line {
    vec![Inline::Code(s.into())]
}

/// A link when the target is an http(s) or mailto URL, plain text otherwise.
pub(crate) fn link(label: impl Into<String>, url: &str) -> Line {
    if is_safe_url(url) {
        vec![Inline::Link {
            label: label.into(),
            url: url.to_string(),
        }]
    } else {
        text(label)
    }
}

fn is_safe_url(url: &str) -> bool {
    let lower = url.trim().to_ascii_lowercase();
    ["https://", "http://", "mailto:"].iter().any(|p| lower.starts_with(p))
}

#[derive(Debug, Clone)]
pub(crate) enum FieldValue {
    Line(Line),
    List(Vec<Line>),
}

#[derive(Debug, Clone)]
pub(crate) enum Block {
    Section {
        title: String,
        anchor: String,
        blocks: Vec<Block>,
    },
    Sub {
        title: String,
        anchor: Option<String>,
        blocks: Vec<Block>,
    },
    Para(Line),
    Fields(Vec<(String, FieldValue)>),
    Bullets(Vec<Line>),
    Table {
        head: Vec<String>,
        rows: Vec<Vec<Line>>,
    },
    /// A titled list item with labeled fields (changelog entries).
    Entries(Vec<(String, Vec<(String, FieldValue)>)>),
}

pub(crate) struct Document {
    pub title: String,
    pub lead: Vec<Line>,
    pub sections: Vec<Block>,
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------- Markdown

pub(crate) fn md_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in collapse(s).chars() {
        match c {
            '\\' | '`' | '*' | '_' | '[' | ']' | '<' | '>' | '|' | '~' | '#' => {
                out.push('\\');
                out.push(c);
            }
            '&' => out.push_str("&amp;"),
            _ => out.push(c),
        }
    }
    out
}

fn md_url(url: &str) -> String {
    url.trim()
        .chars()
        .map(|c| match c {
            ' ' => "%20".to_string(),
            '(' => "%28".to_string(),
            ')' => "%29".to_string(),
            '<' => "%3C".to_string(),
            '>' => "%3E".to_string(),
            c => c.to_string(),
        })
        .collect()
}

pub(crate) fn md_line(line: &Line) -> String {
    let mut out = String::new();
    for i in line {
        match i {
            Inline::Text(s) => out.push_str(&md_escape(s)),
            Inline::Code(s) => {
                let s = collapse(s);
                let fence = if s.contains('`') { "`` " } else { "`" };
                let close = if s.contains('`') { " ``" } else { "`" };
                let _ = write!(out, "{fence}{s}{close}");
            }
            Inline::Link { label, url } => {
                let _ = write!(out, "[{}]({})", md_escape(label), md_url(url));
            }
        }
    }
    out
}

fn md_fields(out: &mut String, fields: &[(String, FieldValue)], indent: &str) {
    for (label, value) in fields {
        match value {
            FieldValue::Line(l) => {
                let _ = writeln!(out, "{indent}- **{label}:** {}", md_line(l));
            }
            FieldValue::List(items) if items.is_empty() => {
                let _ = writeln!(out, "{indent}- **{label}:** None");
            }
            FieldValue::List(items) => {
                let _ = writeln!(out, "{indent}- **{label}:**");
                for item in items {
                    let _ = writeln!(out, "{indent}  - {}", md_line(item));
                }
            }
        }
    }
}

fn md_block(out: &mut String, b: &Block) {
    match b {
        Block::Section { title, blocks, .. } => {
            let _ = writeln!(out, "## {title}\n");
            for b in blocks {
                md_block(out, b);
            }
        }
        Block::Sub { title, blocks, .. } => {
            let _ = writeln!(out, "### {}\n", md_escape(title));
            for b in blocks {
                md_block(out, b);
            }
        }
        Block::Para(l) => {
            let _ = writeln!(out, "{}\n", md_line(l));
        }
        Block::Fields(f) => {
            md_fields(out, f, "");
            out.push('\n');
        }
        Block::Bullets(items) => {
            for i in items {
                let _ = writeln!(out, "- {}", md_line(i));
            }
            out.push('\n');
        }
        Block::Table { head, rows } => {
            let _ = writeln!(out, "| {} |", head.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
            for r in rows {
                let cells: Vec<String> = r.iter().map(md_line).collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            out.push('\n');
        }
        Block::Entries(entries) => {
            for (title, fields) in entries {
                let _ = writeln!(out, "- **{}**", md_escape(title));
                md_fields(out, fields, "  ");
            }
            out.push('\n');
        }
    }
}

pub(crate) fn to_markdown(doc: &Document) -> String {
    let mut out = format!("# {}\n\n", md_escape(&doc.title));
    for l in &doc.lead {
        let _ = writeln!(out, "{}\n", md_line(l));
    }
    for s in &doc.sections {
        md_block(&mut out, s);
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

pub(crate) fn blocks_to_markdown(blocks: &[Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        md_block(&mut out, b);
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

// -------------------------------------------------------------------- HTML

pub(crate) fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Anchor ids keep ASCII letters, digits, `-` and `_`.
pub(crate) fn anchor_id(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn html_line(line: &Line) -> String {
    let mut out = String::new();
    for i in line {
        match i {
            Inline::Text(s) => out.push_str(&html_escape(&collapse(s))),
            Inline::Code(s) => {
                let _ = write!(out, "<code>{}</code>", html_escape(&collapse(s)));
            }
            Inline::Link { label, url } => {
                let _ = write!(
                    out,
                    "<a href=\"{}\" rel=\"noopener noreferrer\">{}</a>",
                    html_escape(url.trim()),
                    html_escape(&collapse(label))
                );
            }
        }
    }
    out
}

fn html_fields(out: &mut String, fields: &[(String, FieldValue)]) {
    out.push_str("<dl>\n");
    for (label, value) in fields {
        let _ = write!(out, "<dt>{}</dt><dd>", html_escape(label));
        match value {
            FieldValue::Line(l) => out.push_str(&html_line(l)),
            FieldValue::List(items) if items.is_empty() => out.push_str("None"),
            FieldValue::List(items) => {
                out.push_str("<ul>");
                for i in items {
                    let _ = write!(out, "<li>{}</li>", html_line(i));
                }
                out.push_str("</ul>");
            }
        }
        out.push_str("</dd>\n");
    }
    out.push_str("</dl>\n");
}

fn html_block(out: &mut String, b: &Block) {
    match b {
        Block::Section { title, anchor, blocks } => {
            let _ = writeln!(
                out,
                "<section id=\"{}\">\n<h2>{}</h2>",
                anchor_id(anchor),
                html_escape(title)
            );
            for b in blocks {
                html_block(out, b);
            }
            out.push_str("</section>\n");
        }
        Block::Sub { title, anchor, blocks } => {
            match anchor {
                Some(a) => {
                    let _ = writeln!(out, "<article id=\"{}\">", anchor_id(a));
                }
                None => out.push_str("<article>\n"),
            }
            let _ = writeln!(out, "<h3>{}</h3>", html_escape(title));
            for b in blocks {
                html_block(out, b);
            }
            out.push_str("</article>\n");
        }
        Block::Para(l) => {
            let _ = writeln!(out, "<p>{}</p>", html_line(l));
        }
        Block::Fields(f) => html_fields(out, f),
        Block::Bullets(items) => {
            out.push_str("<ul>\n");
            for i in items {
                let _ = writeln!(out, "<li>{}</li>", html_line(i));
            }
            out.push_str("</ul>\n");
        }
        Block::Table { head, rows } => {
            out.push_str("<table>\n<thead><tr>");
            for h in head {
                let _ = write!(out, "<th>{}</th>", html_escape(h));
            }
            out.push_str("</tr></thead>\n<tbody>\n");
            for r in rows {
                out.push_str("<tr>");
                for c in r {
                    let _ = write!(out, "<td>{}</td>", html_line(c));
                }
                out.push_str("</tr>\n");
            }
            out.push_str("</tbody>\n</table>\n");
        }
        Block::Entries(entries) => {
            out.push_str("<ul class=\"entries\">\n");
            for (title, fields) in entries {
                let _ = writeln!(out, "<li><strong>{}</strong>", html_escape(title));
                html_fields(out, fields);
                out.push_str("</li>\n");
            }
            out.push_str("</ul>\n");
        }
    }
}

const STYLE: &str = "body{font-family:system-ui,sans-serif;line-height:1.5;margin:0;color:#1b1b1b;background:#fff}\
main{max-width:58rem;margin:0 auto;padding:1.5rem}\
nav ul{list-style:none;padding:0;display:flex;flex-wrap:wrap;gap:.25rem 1rem}\
section{border-top:1px solid #ddd;margin-top:1.5rem}\
article{margin:1rem 0;padding:.5rem 1rem;border-left:3px solid #8a8a8a}\
dl{display:grid;grid-template-columns:max-content 1fr;gap:.2rem 1rem}dt{font-weight:600}dd{margin:0}\
table{border-collapse:collapse}th,td{border:1px solid #ccc;padding:.25rem .5rem;text-align:left}\
code{background:#f3f3f3;padding:0 .2rem}";

pub(crate) fn to_html(doc: &Document) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n\
         <title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<main>\n<header>\n<h1>{}</h1>\n",
        html_escape(&doc.title),
        html_escape(&doc.title)
    );
    for l in &doc.lead {
        let _ = writeln!(out, "<p>{}</p>", html_line(l));
    }
    out.push_str("<nav><ul>\n");
    for s in &doc.sections {
        if let Block::Section { title, anchor, .. } = s {
            let _ = writeln!(
                out,
                "<li><a href=\"#{}\">{}</a></li>",
                anchor_id(anchor),
                html_escape(title)
            );
        }
    }
    out.push_str("</ul></nav>\n</header>\n");
    for s in &doc.sections {
        html_block(&mut out, s);
    }
    out.push_str("</main>\n</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping() {
        assert_eq!(
            html_escape("<script>alert('x')</script>"),
            "&lt;script&gt;alert(&#39;x&#39;)&lt;/script&gt;"
        );
        assert_eq!(md_escape("a *b* [c](d) <e>\nf"), "a \\*b\\* \\[c\\](d) \\<e\\> f");
        assert_eq!(anchor_id("hazard-ASH-2025-0142"), "hazard-ASH-2025-0142");
        assert_eq!(anchor_id("a b\"c"), "a-b-c");
    }

    #[test]
    fn unsafe_links_become_text() {
        let l = link("x", "javascript:alert(1)");
        assert!(matches!(l.as_slice(), [Inline::Text(_)]));
        assert_eq!(
            md_line(&link("a", "https://e.example/a b(c)")),
            "[a](https://e.example/a%20b%28c%29)"
        );
    }
}
