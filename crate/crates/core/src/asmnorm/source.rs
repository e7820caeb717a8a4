//! Canonical C formatting.
//!
//! House style: four-space indentation, one statement per line, the opening
//! brace of a block on the line of its header, the closing brace on a line of
//! its own (`} else {` and `} while (...);` stay joined). Comments and
//! `#include` lines are dropped; other preprocessor lines are kept verbatim
//! on lines of their own. Binary operators get a space on both sides, unary
//! operators none. Brace initializers stay inline: `{1, 2, 3}`.
//!
//! The layout is a function of the token stream alone, so formatting an
//! already formatted body is a no-op.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctoken::{self, is_keyword, LexError, Token, TokenKind};

use super::CANONICAL_NAME;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalSource {
    pub func_name: String,
    pub body: String,
    pub original_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("no function definition found")]
    NoFunctionFound,
    #[error("expected a single function definition, found {}: {}", .0.len(), .0.join(", "))]
    MultipleFunctions(Vec<String>),
    #[error("could not tokenize source: {0}")]
    Lex(#[from] LexError),
}

pub fn canonicalize_source(src: &str) -> Result<CanonicalSource, SourceError> {
    let tokens: Vec<Token> = ctoken::lex(src)?
        .into_iter()
        .filter(|t| !(t.kind == TokenKind::Directive && t.text.starts_with("#include")))
        .collect();
    ctoken::check_balanced(&tokens)?;
    let defs = ctoken::function_definitions(&tokens);
    let original_name = match defs.as_slice() {
        [] => return Err(SourceError::NoFunctionFound),
        [one] => one.name.clone(),
        many => {
            return Err(SourceError::MultipleFunctions(
                many.iter().map(|d| d.name.clone()).collect(),
            ))
        }
    };
    let renamed: Vec<Token> = tokens
        .into_iter()
        .map(|mut t| {
            if t.kind == TokenKind::Ident && t.text == original_name {
                t.text = CANONICAL_NAME.to_string();
            }
            t
        })
        .collect();
    Ok(CanonicalSource {
        func_name: CANONICAL_NAME.to_string(),
        body: format_tokens(&renamed),
        original_name,
    })
}

const TYPE_WORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "const",
    "volatile", "bool", "_Bool", "size_t", "ssize_t", "int8_t", "int16_t", "int32_t", "int64_t",
    "uint8_t", "uint16_t", "uint32_t", "uint64_t", "FILE",
];

/// Whether `t` ends an operand, so that a following `-`, `*`, `&` or `++`
/// binds as binary or postfix.
fn ends_operand(t: &Token) -> bool {
    match t.kind {
        TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
        TokenKind::Ident => !is_keyword(&t.text),
        TokenKind::Punct => matches!(t.text.as_str(), ")" | "]"),
        TokenKind::Directive => false,
    }
}

fn is_type_word(t: &Token) -> bool {
    t.kind == TokenKind::Ident && TYPE_WORDS.contains(&t.text.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Brace {
    Block,
    DoBlock,
    Init,
}

struct Formatter {
    lines: Vec<String>,
    line: String,
    indent: usize,
    paren_depth: usize,
    ternary_depth: usize,
    braces: Vec<Brace>,
    case_pending: bool,
    /// Suppress the space before the next token.
    glue_next: bool,
    /// A block was just closed; decide on the next token whether to join.
    closed_block: Option<Brace>,
    prev: Option<Token>,
}

impl Formatter {
    fn new() -> Self {
        Formatter {
            lines: Vec::new(),
            line: String::new(),
            indent: 0,
            paren_depth: 0,
            ternary_depth: 0,
            braces: Vec::new(),
            case_pending: false,
            glue_next: false,
            closed_block: None,
            prev: None,
        }
    }

    fn flush(&mut self) {
        if !self.line.is_empty() {
            let line = std::mem::take(&mut self.line);
            self.lines.push(format!("{}{}", "    ".repeat(self.indent), line));
        }
        self.glue_next = false;
    }

    /// Appends a token, with a space unless `glue` or line start. Adjacent
    /// tokens that would lex differently when joined always get a space.
    fn push(&mut self, text: &str, glue: bool) {
        if !self.line.is_empty() && (!(glue || self.glue_next) || self.would_merge(text)) {
            self.line.push(' ');
        }
        self.line.push_str(text);
        self.glue_next = false;
    }

    fn would_merge(&self, next: &str) -> bool {
        let Some(prev) = &self.prev else { return false };
        let joined = format!("{}{}", prev.text, next);
        match ctoken::lex(&joined) {
            Ok(toks) => toks.len() != 2 || toks[0].text != prev.text,
            Err(_) => true,
        }
    }

    fn in_init(&self) -> bool {
        self.braces.last() == Some(&Brace::Init)
    }

    fn token(&mut self, t: &Token) {
        if let Some(closed) = self.closed_block.take() {
            let joins = t.is_punct(";")
                || t.is_punct(",")
                || t.is_ident("else")
                || (closed == Brace::DoBlock && t.is_ident("while"));
            if !joins {
                self.flush();
            }
        }

        let prev = self.prev.clone();
        let prev_ends_operand = prev.as_ref().is_some_and(ends_operand);
        let text = t.text.as_str();

        match t.kind {
            TokenKind::Directive => {
                self.flush();
                let saved = self.indent;
                self.indent = 0;
                self.line = text.to_string();
                self.flush();
                self.indent = saved;
            }
            TokenKind::Punct => match text {
                "{" => {
                    let init = self.in_init()
                        || self.paren_depth > 0
                        || prev.as_ref().is_some_and(|p| {
                            p.is_punct("=") || p.is_punct(",") || p.is_punct("(") || p.is_ident("return")
                        });
                    if init {
                        self.push("{", prev.as_ref().is_some_and(|p| p.is_punct("(")));
                        self.glue_next = true;
                        self.braces.push(Brace::Init);
                    } else {
                        let kind = if prev.as_ref().is_some_and(|p| p.is_ident("do")) {
                            Brace::DoBlock
                        } else {
                            Brace::Block
                        };
                        self.push("{", false);
                        self.flush();
                        self.indent += 1;
                        self.braces.push(kind);
                    }
                }
                "}" => match self.braces.pop() {
                    Some(Brace::Init) => self.push("}", true),
                    kind => {
                        self.flush();
                        self.indent = self.indent.saturating_sub(1);
                        self.push("}", false);
                        self.closed_block = Some(kind.unwrap_or(Brace::Block));
                    }
                },
                ";" => {
                    self.push(";", true);
                    if self.paren_depth == 0 {
                        self.flush();
                    }
                }
                "," => {
                    self.push(",", true);
                }
                "(" => {
                    let glue = prev.as_ref().is_some_and(|p| {
                        (p.kind == TokenKind::Ident && !is_keyword(&p.text))
                            || p.is_ident("sizeof")
                            || p.is_punct(")")
                            || p.is_punct("]")
                    });
                    self.push("(", glue);
                    self.glue_next = true;
                    self.paren_depth += 1;
                }
                ")" => {
                    self.push(")", true);
                    self.paren_depth = self.paren_depth.saturating_sub(1);
                }
                "[" => {
                    self.push("[", prev_ends_operand);
                    self.glue_next = true;
                }
                "]" => self.push("]", true),
                "." | "->" => {
                    self.push(text, true);
                    self.glue_next = true;
                }
                "++" | "--" => {
                    if prev_ends_operand {
                        self.push(text, true);
                    } else {
                        self.push(text, false);
                        self.glue_next = true;
                    }
                }
                "!" | "~" => {
                    self.push(text, false);
                    self.glue_next = true;
                }
                "-" | "+" | "*" | "&" => {
                    let pointer_decl = (text == "*" || text == "&")
                        && prev.as_ref().is_some_and(|p| is_type_word(p) || p.is_punct("*"));
                    if prev_ends_operand && !pointer_decl {
                        self.push(text, false);
                    } else {
                        let glue = prev.as_ref().is_some_and(|p| p.is_punct("*"));
                        self.push(text, glue);
                        self.glue_next = true;
                    }
                }
                "?" => {
                    self.ternary_depth += 1;
                    self.push("?", false);
                }
                ":" => {
                    if self.case_pending && self.ternary_depth == 0 {
                        self.case_pending = false;
                        self.push(":", true);
                        self.flush();
                    } else if self.ternary_depth > 0 {
                        self.ternary_depth -= 1;
                        self.push(":", false);
                    } else if self.paren_depth == 0
                        && self.braces.last().is_some_and(|b| *b != Brace::Init)
                        && self.line.split(' ').count() == 1
                        && prev.as_ref().is_some_and(|p| p.kind == TokenKind::Ident)
                    {
                        // goto label
                        self.push(":", true);
                        self.flush();
                    } else {
                        self.push(":", false);
                    }
                }
                _ => self.push(text, false),
            },
            TokenKind::Ident => {
                if text == "case" || text == "default" {
                    // `default` inside a generic selection is not handled.
                    self.case_pending = true;
                }
                self.push(text, false);
            }
            TokenKind::Number | TokenKind::Str | TokenKind::Char => self.push(text, false),
        }
        self.prev = Some(t.clone());
    }

    fn finish(mut self) -> String {
        self.closed_block = None;
        self.flush();
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

/// Lays out a token stream in the house style.
pub fn format_tokens(tokens: &[Token]) -> String {
    let mut f = Formatter::new();
    for t in tokens {
        f.token(t);
    }
    f.finish()
}
