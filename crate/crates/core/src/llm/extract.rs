//! Pulling a C function out of a model response.

use std::sync::OnceLock;

use regex::Regex;

use crate::ctoken::is_keyword;

/// Positions and kinds of braces outside string and character literals and
/// comments.
fn braces(text: &str) -> Vec<(usize, u8)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            c @ (b'{' | b'}') => out.push((i, c)),
            q @ (b'"' | b'\'') => {
                i += 1;
                while i < b.len() && b[i] != q && b[i] != b'\n' {
                    if b[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            b'/' if b.get(i + 1) == Some(&b'/') => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if b.get(i + 1) == Some(&b'*') => match text[i + 2..].find("*/") {
                Some(p) => i += 2 + p + 1,
                None => break,
            },
            _ => {}
        }
        i += 1;
    }
    out
}

/// Byte offset of the `}` closing the `{` at `open`.
fn matching_brace(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (pos, c) in braces(&text[open..]) {
        if c == b'{' {
            depth += 1;
        } else {
            depth = depth.checked_sub(1)?;
            if depth == 0 {
                return Some(open + pos);
            }
        }
    }
    None
}

/// True when every brace is matched and some `(` precedes the first `{`.
pub fn is_safe_candidate(text: &str) -> bool {
    let Some(first_open) = text.find('{') else {
        return false;
    };
    if !text[..first_open].contains('(') {
        return false;
    }
    let mut depth = 0i64;
    for (_, c) in braces(text) {
        depth += if c == b'{' { 1 } else { -1 };
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

fn fenced_blocks(raw: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in raw.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                let mut body = lines.join("\n");
                body.push('\n');
                blocks.push(body);
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    blocks
}

fn signature_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)^[ \t]*(?:[A-Za-z_][\w \t\*]*?[\s\*])?([A-Za-z_]\w*)[ \t]*\([^;{}()]*(?:\([^;{}()]*\)[^;{}()]*)*\)[ \t\r\n]*\{")
            .expect("valid signature pattern")
    })
}

/// The longest span that starts at a function signature and ends at the
/// brace closing its body.
fn longest_function_span(raw: &str) -> Option<String> {
    let mut best: Option<&str> = None;
    for caps in signature_re().captures_iter(raw) {
        let whole = caps.get(0).expect("match");
        if is_keyword(&caps[1]) {
            continue;
        }
        let open = whole.end() - 1;
        let Some(close) = matching_brace(raw, open) else {
            continue;
        };
        let span = raw[whole.start()..=close].trim_start_matches(['\n', '\r']);
        if best.is_none_or(|b| span.len() > b.len()) {
            best = Some(span);
        }
    }
    best.map(|s| format!("{s}\n"))
}

/// The candidate source in a raw model response: the first fenced block that
/// looks like a function, else the longest bare function, else `None`.
pub fn extract_source(raw: &str) -> Option<String> {
    if let Some(block) = fenced_blocks(raw).into_iter().find(|b| is_safe_candidate(b)) {
        return Some(block);
    }
    longest_function_span(raw).filter(|s| is_safe_candidate(s))
}
