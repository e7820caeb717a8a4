//! Prompt rendering for retrieved exemplars and optimization rules.
//!
//! A retrieval prompt has this grammar (no trailing newline):
//!
//! ```text
//! [Example 1]
//! Assembly:
//! <asm text>
//! Source:
//! <source text>
//!
//! [Example 2]
//! ...
//! [This is the assembly:]
//! <target assembly>
//! What is the source code?
//! ```
//!
//! Texts are embedded with trailing newlines stripped. A text containing a
//! line equal to one of the marker lines is rejected because the prompt
//! could no longer be parsed back unambiguously.

pub mod rules;

use std::path::PathBuf;

use thiserror::Error;

pub use rules::{known_flags, load_rules, RuleDescriptor, RuleRegistry};

pub const DEFAULT_TOKEN_CAP: usize = 10_000;
pub const TARGET_MARKER: &str = "[This is the assembly:]";
pub const QUESTION_LINE: &str = "What is the source code?";
const ASM_MARKER: &str = "Assembly:";
const SRC_MARKER: &str = "Source:";

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("prompt needs ~{estimate} tokens, cap is {cap}")]
    TokenBudgetExceeded {
        estimate: usize,
        cap: usize,
        /// Position of the exemplar to drop next, if any can be dropped.
        drop_index: Option<usize>,
    },
    #[error("unknown compiler flag {0}")]
    UnknownFlag(String),
    #[error("invalid rule for {flag}: {reason}")]
    InvalidRule { flag: String, reason: String },
    #[error("rule file parse failure{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    ParseFailure { line: Option<usize>, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid prompt input: {0}")]
    InvalidInput(String),
    #[error("malformed prompt: {0}")]
    MalformedPrompt(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub id: String,
    pub asm_text: String,
    pub src_text: String,
    /// `None` for randomly drawn exemplars.
    pub adjusted_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptMode {
    Retrieval,
    Rule,
    /// Target block and question only.
    Bare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub text: String,
    pub mode: PromptMode,
    pub exemplar_ids: Vec<String>,
    pub rule_flag: Option<String>,
    pub token_estimate: usize,
}

/// Approximate token count: runs of `[A-Za-z0-9_]` and every other
/// non-whitespace character each count as one piece, and the estimate is
/// `ceil(pieces * 1.3)`.
pub fn estimate_tokens(text: &str) -> usize {
    let mut pieces = 0usize;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            if !in_word {
                pieces += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                pieces += 1;
            }
        }
    }
    (pieces * 13).div_ceil(10)
}

fn is_marker_line(line: &str) -> bool {
    line == ASM_MARKER
        || line == SRC_MARKER
        || line == TARGET_MARKER
        || line == QUESTION_LINE
        || parse_example_header(line).is_some()
}

fn parse_example_header(line: &str) -> Option<usize> {
    line.strip_prefix("[Example ")?
        .strip_suffix(']')?
        .parse()
        .ok()
}

fn embeddable<'a>(what: &str, text: &'a str) -> Result<&'a str, ContextError> {
    let t = text.trim_end_matches('\n');
    if t.trim().is_empty() {
        return Err(ContextError::InvalidInput(format!("{what} is empty")));
    }
    if let Some(l) = t.lines().find(|l| is_marker_line(l)) {
        return Err(ContextError::InvalidInput(format!(
            "{what} contains the marker line {l:?}"
        )));
    }
    Ok(t)
}

fn target_block(out: &mut String, target_asm: &str) -> Result<(), ContextError> {
    let t = embeddable("target assembly", target_asm)?;
    out.push_str(TARGET_MARKER);
    out.push('\n');
    out.push_str(t);
    out.push('\n');
    out.push_str(QUESTION_LINE);
    Ok(())
}

fn check_budget(text: &str, cap: usize, drop_index: Option<usize>) -> Result<usize, ContextError> {
    let estimate = estimate_tokens(text);
    if estimate > cap {
        return Err(ContextError::TokenBudgetExceeded {
            estimate,
            cap,
            drop_index,
        });
    }
    Ok(estimate)
}

/// Renders a retrieval prompt. `exemplars` must already be in descending
/// score order and hold exactly `k` entries.
pub fn build_retrieval_prompt(
    target_asm: &str,
    exemplars: &[Exemplar],
    k: usize,
    token_cap: usize,
) -> Result<Prompt, ContextError> {
    if exemplars.len() != k {
        return Err(ContextError::InvalidInput(format!(
            "expected {k} exemplars, got {}",
            exemplars.len()
        )));
    }
    let mut text = String::new();
    for (i, ex) in exemplars.iter().enumerate() {
        let asm = embeddable("exemplar assembly", &ex.asm_text)?;
        let src = embeddable("exemplar source", &ex.src_text)?;
        text.push_str(&format!(
            "[Example {}]\n{ASM_MARKER}\n{asm}\n{SRC_MARKER}\n{src}\n\n",
            i + 1
        ));
    }
    target_block(&mut text, target_asm)?;
    let drop = if k > 1 { Some(k - 1) } else { None };
    let token_estimate = check_budget(&text, token_cap, drop)?;
    Ok(Prompt {
        text,
        mode: if k == 0 {
            PromptMode::Bare
        } else {
            PromptMode::Retrieval
        },
        exemplar_ids: exemplars.iter().map(|e| e.id.clone()).collect(),
        rule_flag: None,
        token_estimate,
    })
}

/// Renders with the overflow policy applied: while over budget, drop the
/// lowest-scored (last) exemplar, down to one.
pub fn fit_retrieval_prompt(
    target_asm: &str,
    exemplars: &[Exemplar],
    token_cap: usize,
) -> Result<Prompt, ContextError> {
    let mut k = exemplars.len();
    loop {
        match build_retrieval_prompt(target_asm, &exemplars[..k], k, token_cap) {
            Err(ContextError::TokenBudgetExceeded {
                drop_index: Some(i),
                ..
            }) => k = i,
            other => return other,
        }
    }
}

/// The prompt used without any context.
pub fn build_bare_prompt(target_asm: &str, token_cap: usize) -> Result<Prompt, ContextError> {
    build_retrieval_prompt(target_asm, &[], 0, token_cap)
}

/// Renders a single-rule prompt.
pub fn build_rule_prompt(
    target_asm: &str,
    rule: &RuleDescriptor,
    token_cap: usize,
) -> Result<Prompt, ContextError> {
    rule.validate()?;
    let mut text = String::from("Optimize options instructions\n");
    text.push_str("The binary you are decompiling may have been compiled with the GCC/Clang option ");
    text.push_str(&rule.flag);
    if let Some(title) = &rule.title {
        text.push_str(&format!(" ({title})"));
    }
    text.push_str(".\n\n");
    for bullet in rule.bullets() {
        text.push_str("- ");
        text.push_str(bullet);
        text.push('\n');
    }
    text.push_str("\nIllustrative Source:\n");
    text.push_str(rule.example_source.trim_matches('\n'));
    text.push_str("\n\nDecompilation Hint:\n");
    text.push_str(rule.hint.trim());
    text.push('\n');
    target_block(&mut text, target_asm)?;
    let token_estimate = check_budget(&text, token_cap, None)?;
    Ok(Prompt {
        text,
        mode: PromptMode::Rule,
        exemplar_ids: Vec::new(),
        rule_flag: Some(rule.flag.clone()),
        token_estimate,
    })
}

/// The target assembly of any rendered prompt.
pub fn prompt_target(text: &str) -> Option<&str> {
    let body = text.strip_suffix(QUESTION_LINE)?.strip_suffix('\n')?;
    let marker = format!("{TARGET_MARKER}\n");
    if let Some(rest) = body.strip_prefix(&marker) {
        return Some(rest);
    }
    let at = body.rfind(&format!("\n{marker}"))?;
    Some(&body[at + 1 + marker.len()..])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRetrievalPrompt {
    /// (assembly, source) per example, in order.
    pub examples: Vec<(String, String)>,
    pub target: String,
}

/// Parses a prompt rendered by [`build_retrieval_prompt`].
pub fn parse_retrieval_prompt(text: &str) -> Result<ParsedRetrievalPrompt, ContextError> {
    let bad = |m: &str| ContextError::MalformedPrompt(m.to_string());
    let lines: Vec<&str> = text.split('\n').collect();
    if lines.last() != Some(&QUESTION_LINE) {
        return Err(bad("missing final question line"));
    }
    let body = &lines[..lines.len() - 1];
    let target_at = body
        .iter()
        .position(|l| *l == TARGET_MARKER)
        .ok_or_else(|| bad("missing target marker"))?;
    if body[target_at + 1..].is_empty() {
        return Err(bad("empty target"));
    }
    let target = body[target_at + 1..].join("\n");

    let mut examples = Vec::new();
    let mut i = 0;
    let head = &body[..target_at];
    while i < head.len() {
        let n = parse_example_header(head[i]).ok_or_else(|| bad("expected an example header"))?;
        if n != examples.len() + 1 {
            return Err(bad("examples are not numbered consecutively"));
        }
        if head.get(i + 1) != Some(&ASM_MARKER) {
            return Err(bad("missing Assembly: line"));
        }
        let src_at = (i + 2..head.len())
            .find(|&j| head[j] == SRC_MARKER)
            .ok_or_else(|| bad("missing Source: line"))?;
        let end = (src_at + 1..head.len())
            .find(|&j| head[j].is_empty() && (j + 1 == head.len() || parse_example_header(head[j + 1]).is_some()))
            .ok_or_else(|| bad("unterminated example"))?;
        examples.push((head[i + 2..src_at].join("\n"), head[src_at + 1..end].join("\n")));
        i = end + 1;
    }
    Ok(ParsedRetrievalPrompt { examples, target })
}
