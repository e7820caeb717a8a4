//! A permissive C tokenizer.
//!
//! Good enough to reformat single functions, count decision points and find
//! function boundaries. It does not expand macros and it does not build a
//! syntax tree. Comments are dropped; preprocessor lines come through as a
//! single [`TokenKind::Directive`] token each.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    Directive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based source line the token starts on.
    pub line: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_ident(&self, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal starting on line {0}")]
    UnterminatedString(usize),
    #[error("unterminated character literal starting on line {0}")]
    UnterminatedChar(usize),
    #[error("unterminated block comment starting on line {0}")]
    UnterminatedComment(usize),
    #[error("unbalanced '{open}' / '{close}' near line {line}")]
    Unbalanced {
        open: char,
        close: char,
        line: usize,
    },
}

const PUNCTS: &[&str] = &[
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "::", "##",
];

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool", "bool",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Normalizes a preprocessor line: `#  define X  1` becomes `#define X  1`.
fn normalize_directive(raw: &str) -> String {
    let body = raw.trim().trim_start_matches('#').trim_start();
    let name_end = body
        .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .unwrap_or(body.len());
    let (name, rest) = body.split_at(name_end);
    let rest = rest.trim();
    if rest.is_empty() {
        format!("#{name}")
    } else {
        format!("#{name} {rest}")
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut at_line_start = true;

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && at_line_start {
            let start = i;
            let start_line = line;
            // Directive runs to end of line, honouring backslash continuations.
            while i < chars.len() && chars[i] != '\n' {
                if chars[i] == '\\' && i + 1 < chars.len() && chars[i + 1] == '\n' {
                    i += 2;
                    line += 1;
                    continue;
                }
                i += 1;
            }
            let raw: String = chars[start..i]
                .iter()
                .collect::<String>()
                .replace("\\\n", " ");
            tokens.push(Token {
                kind: TokenKind::Directive,
                text: normalize_directive(&raw),
                line: start_line,
            });
            continue;
        }
        at_line_start = false;

        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start_line = line;
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(LexError::UnterminatedComment(start_line));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let start = i;
            let start_line = line;
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(if c == '"' {
                            LexError::UnterminatedString(start_line)
                        } else {
                            LexError::UnterminatedChar(start_line)
                        })
                    }
                    Some('\\') => i += 2,
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            tokens.push(Token {
                kind: if c == '"' {
                    TokenKind::Str
                } else {
                    TokenKind::Char
                },
                text: chars[start..i].iter().collect(),
                line: start_line,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            i += 1;
            let is_hex = chars.get(start + 1).is_some_and(|x| matches!(x, 'x' | 'X'));
            while i < chars.len() {
                let d = chars[i];
                let prev = chars[i - 1];
                let exponent = if is_hex {
                    matches!(prev, 'p' | 'P')
                } else {
                    matches!(prev, 'e' | 'E')
                };
                if d.is_ascii_alphanumeric() || d == '_' || d == '.' || ((d == '+' || d == '-') && exponent) {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: chars[start..i].iter().collect(),
                line,
            });
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: chars[start..i].iter().collect(),
                line,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let punct = PUNCTS
            .iter()
            .find(|p| rest.starts_with(*p))
            .map(|p| p.to_string())
            .unwrap_or_else(|| c.to_string());
        i += punct.chars().count();
        tokens.push(Token {
            kind: TokenKind::Punct,
            text: punct,
            line,
        });
    }
    Ok(tokens)
}

/// Checks that `()`, `[]` and `{}` nest properly.
pub fn check_balanced(tokens: &[Token]) -> Result<(), LexError> {
    let mut stack: Vec<(char, usize)> = Vec::new();
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Punct) {
        let c = match t.text.as_str() {
            "(" | "[" | "{" => {
                stack.push((t.text.chars().next().unwrap(), t.line));
                continue;
            }
            ")" => '(',
            "]" => '[',
            "}" => '{',
            _ => continue,
        };
        match stack.pop() {
            Some((open, _)) if open == c => {}
            Some((open, line)) => {
                return Err(LexError::Unbalanced {
                    open,
                    close: closing(open),
                    line,
                })
            }
            None => {
                return Err(LexError::Unbalanced {
                    open: c,
                    close: closing(c),
                    line: t.line,
                })
            }
        }
    }
    if let Some((open, line)) = stack.pop() {
        return Err(LexError::Unbalanced {
            open,
            close: closing(open),
            line,
        });
    }
    Ok(())
}

fn closing(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        _ => '}',
    }
}

/// Index of the token that closes the bracket opened at `open_idx`.
pub fn matching_close(tokens: &[Token], open_idx: usize) -> Option<usize> {
    let open = tokens[open_idx].text.as_str();
    let close = match open {
        "(" => ")",
        "[" => "]",
        "{" => "}",
        _ => return None,
    };
    let mut depth = 0usize;
    for (j, t) in tokens.iter().enumerate().skip(open_idx) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == open {
            depth += 1;
        } else if t.text == close {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// Index of the token that opens the bracket closed at `close_idx`.
pub fn matching_open(tokens: &[Token], close_idx: usize) -> Option<usize> {
    let close = tokens[close_idx].text.as_str();
    let open = match close {
        ")" => "(",
        "]" => "[",
        "}" => "{",
        _ => return None,
    };
    let mut depth = 0usize;
    for j in (0..=close_idx).rev() {
        let t = &tokens[j];
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == close {
            depth += 1;
        } else if t.text == open {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// A top-level function definition found in a token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpan {
    pub name: String,
    /// Token index of the function name.
    pub name_idx: usize,
    /// Token index of the opening brace of the body.
    pub body_open: usize,
    /// Token index of the closing brace of the body.
    pub body_close: usize,
}

/// Finds top-level function definitions: a `{` at file scope directly preceded
/// by the `)` of a parameter list.
pub fn function_definitions(tokens: &[Token]) -> Vec<FunctionSpan> {
    let mut found = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct("{") {
            let close = match matching_close(tokens, i) {
                Some(c) => c,
                None => break,
            };
            if i > 0 && tokens[i - 1].is_punct(")") {
                if let Some(open) = matching_open(tokens, i - 1) {
                    if open > 0 && tokens[open - 1].kind == TokenKind::Ident {
                        let name = &tokens[open - 1];
                        if !is_keyword(&name.text) {
                            found.push(FunctionSpan {
                                name: name.text.clone(),
                                name_idx: open - 1,
                                body_open: i,
                                body_close: close,
                            });
                        }
                    }
                }
            }
            i = close + 1;
            continue;
        }
        i += 1;
    }
    found
}

/// Header names from `#include <x>` / `#include "x"` lines.
pub fn include_headers(src: &str) -> Vec<String> {
    src.lines()
        .filter_map(|l| {
            let l = l.trim_start();
            let rest = l.strip_prefix('#')?.trim_start().strip_prefix("include")?;
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('<')
                .and_then(|r| r.split('>').next())
                .or_else(|| rest.strip_prefix('"').and_then(|r| r.split('"').next()))?;
            Some(inner.trim().to_string())
        })
        .collect()
}
