//! Assembly and C source normalization.
//!
//! [`normalize_asm`] is a pure text transform applied in a fixed order:
//!
//! 1. strip comments: `#` and `;` to end of line, and `/* ... */` blocks
//! 2. delete the register prefix `%`
//! 3. surround the punctuation tokens `,` `(` `)` `[` `]` `:` with single spaces
//! 4. rewrite standalone hexadecimal literals (`0x10`, `$0xff`, `-0x8`) to decimal
//! 5. replace instruction address labels with `[INST-k]` placeholders and
//!    renumber `.L` family labels
//! 6. collapse whitespace runs to single spaces and drop empty lines
//!
//! Double-quoted string literals (as in `.string "..."`) pass through steps
//! 1 and 3 to 6 untouched. Step 2 applies everywhere so that bodies never
//! carry a `%`. Data directives (`.quad`, `.string`, ...) are kept.
//!
//! Address labels are line-leading tokens that start with a digit and are
//! otherwise hexadecimal digits, followed by `:` (GAS numeric locals such as
//! `1:` and objdump-style addresses such as `401126:`). References are the
//! operands of branch-like instructions (`j*`, `call*`, `loop*`) that are
//! bare address tokens, plus GAS local references `1b` / `1f` (read as local
//! references only when label `1` is defined, else as hex addresses). Placeholders
//! are numbered from 1 in order of first occurrence. Named local labels
//! matching `.L<letters><digits>` are kept, but renumbered from 0 within
//! each letter family (`.L`, `.LC`, `.LFB`, ...) in order of first occurrence.

mod source;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use source::{canonicalize_source, CanonicalSource, SourceError};

/// Canonical name every sliced or canonicalized function is renamed to.
pub const CANONICAL_NAME: &str = "func0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
}

impl OptLevel {
    pub const ALL: [OptLevel; 4] = [OptLevel::O0, OptLevel::O1, OptLevel::O2, OptLevel::O3];

    pub fn as_flag(self) -> &'static str {
        match self {
            OptLevel::O0 => "-O0",
            OptLevel::O1 => "-O1",
            OptLevel::O2 => "-O2",
            OptLevel::O3 => "-O3",
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_flag()[1..])
    }
}

impl FromStr for OptLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_start_matches('-').to_ascii_uppercase().as_str() {
            "O0" => Ok(OptLevel::O0),
            "O1" => Ok(OptLevel::O1),
            "O2" => Ok(OptLevel::O2),
            "O3" => Ok(OptLevel::O3),
            other => Err(format!("unknown optimization level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAssemblyUnit {
    pub origin_path: String,
    pub compiler_id: String,
    pub opt_level: OptLevel,
    pub text: String,
}

impl RawAssemblyUnit {
    pub fn new(text: impl Into<String>) -> Self {
        RawAssemblyUnit {
            origin_path: String::new(),
            compiler_id: String::new(),
            opt_level: OptLevel::O0,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedAsm {
    pub func_name: String,
    pub body: String,
    /// `(original label, placeholder)` pairs in placeholder order.
    pub placeholder_map: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("assembly listing has no instruction lines")]
    EmptyInput,
    #[error("malformed address label `{label}` on line {line}")]
    MalformedLabel { line: usize, label: String },
    #[error("symbol `{0}` not found in listing")]
    SymbolNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Code(String),
    Str(String),
}

impl Tok {
    fn code(&self) -> Option<&str> {
        match self {
            Tok::Code(s) => Some(s),
            Tok::Str(_) => None,
        }
    }

    fn text(&self) -> &str {
        match self {
            Tok::Code(s) | Tok::Str(s) => s,
        }
    }
}

/// Step 1. Block comments are replaced by a space (keeping their newlines).
fn strip_comments(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                out.push(c);
                i += 1;
                while i < chars.len() && chars[i] != '\n' {
                    out.push(chars[i]);
                    if chars[i] == '\\' && i + 1 < chars.len() && chars[i + 1] != '\n' {
                        out.push(chars[i + 1]);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    if chars[i - 1] == '"' {
                        break;
                    }
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                out.push(' ');
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        out.push('\n');
                    }
                    i += 1;
                }
                i = (i + 2).min(chars.len());
            }
            '#' | ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

const PUNCT: &[char] = &[',', '(', ')', '[', ']', ':'];

fn placeholder_at(chars: &[char], i: usize) -> Option<usize> {
    const PREFIX: &[char] = &['[', 'I', 'N', 'S', 'T', '-'];
    if chars.len() < i + PREFIX.len() + 2 || chars[i..i + PREFIX.len()] != *PREFIX {
        return None;
    }
    let mut j = i + PREFIX.len();
    let digits_start = j;
    while j < chars.len() && chars[j].is_ascii_digit() {
        j += 1;
    }
    (j > digits_start && chars.get(j) == Some(&']')).then_some(j + 1)
}

/// Step 3 (and the tokenization behind step 6): splits a line into tokens,
/// with punctuation as separate tokens and `[INST-k]` kept whole.
fn tokenize_line(line: &str) -> Vec<Tok> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut i = 0;
    let flush = |cur: &mut String, toks: &mut Vec<Tok>| {
        if !cur.is_empty() {
            toks.push(Tok::Code(std::mem::take(cur)));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '"' {
            flush(&mut cur, &mut toks);
            let start = i;
            i += 1;
            while i < chars.len() {
                if chars[i] == '\\' {
                    i += 2;
                    continue;
                }
                i += 1;
                if chars[i - 1] == '"' {
                    break;
                }
            }
            let end = i.min(chars.len());
            toks.push(Tok::Str(chars[start..end].iter().collect()));
        } else if c.is_whitespace() {
            flush(&mut cur, &mut toks);
            i += 1;
        } else if let Some(end) = (c == '[').then(|| placeholder_at(&chars, i)).flatten() {
            flush(&mut cur, &mut toks);
            toks.push(Tok::Code(chars[i..end].iter().collect()));
            i = end;
        } else if PUNCT.contains(&c) {
            flush(&mut cur, &mut toks);
            toks.push(Tok::Code(c.to_string()));
            i += 1;
        } else {
            cur.push(c);
            i += 1;
        }
    }
    flush(&mut cur, &mut toks);
    toks
}

fn hex_to_decimal(hex: &str) -> String {
    if let Ok(v) = u128::from_str_radix(hex, 16) {
        return v.to_string();
    }
    // Arbitrary width: little-endian base-10^9 limbs.
    let mut limbs: Vec<u64> = vec![0];
    for c in hex.chars() {
        let mut carry = c.to_digit(16).unwrap() as u64;
        for limb in limbs.iter_mut() {
            let v = *limb * 16 + carry;
            *limb = v % 1_000_000_000;
            carry = v / 1_000_000_000;
        }
        while carry > 0 {
            limbs.push(carry % 1_000_000_000);
            carry /= 1_000_000_000;
        }
    }
    let mut s = limbs.last().unwrap().to_string();
    for limb in limbs.iter().rev().skip(1) {
        s.push_str(&format!("{limb:09}"));
    }
    s
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// Step 4 on a single code token.
fn rewrite_hex(tok: &str) -> String {
    let chars: Vec<char> = tok.chars().collect();
    let mut out = String::with_capacity(tok.len());
    let mut i = 0;
    while i < chars.len() {
        let standalone_start = i == 0 || !is_word_char(chars[i - 1]);
        if standalone_start
            && chars[i] == '0'
            && matches!(chars.get(i + 1), Some('x' | 'X'))
            && chars.get(i + 2).is_some_and(|c| c.is_ascii_hexdigit())
        {
            let mut j = i + 2;
            while j < chars.len() && chars[j].is_ascii_hexdigit() {
                j += 1;
            }
            let ends_clean = chars
                .get(j)
                .is_none_or(|c| !(c.is_ascii_alphanumeric() || *c == '_'));
            if ends_clean {
                let digits: String = chars[i + 2..j].iter().collect();
                out.push_str(&hex_to_decimal(&digits));
                i = j;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn is_address_token(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_digit()) && cs.all(|c| c.is_ascii_hexdigit())
}

fn is_placeholder(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    placeholder_at(&chars, 0) == Some(chars.len())
}

fn local_ref(s: &str) -> Option<(&str, bool)> {
    let (num, dir) = s.split_at(s.len().checked_sub(1)?);
    if num.is_empty() || !num.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    match dir {
        "b" => Some((num, false)),
        "f" => Some((num, true)),
        _ => None,
    }
}

fn is_branch_mnemonic(m: &str) -> bool {
    let m = m.to_ascii_lowercase();
    m.starts_with('j') || m.starts_with("call") || m.starts_with("loop") || m == "xbegin"
}

/// Where the mnemonic sits in a token line, skipping a leading label definition.
fn mnemonic_index(toks: &[Tok]) -> usize {
    if toks.len() >= 2 && toks[1].code() == Some(":") && toks[0].code().is_some() {
        2
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum LabelKey {
    /// n-th definition of a numeric label token.
    Def(String, usize),
    /// Branch target that is never defined in the listing.
    Absolute(String),
    /// Placeholder already present in the input.
    Existing(String),
}

/// Step 5. Returns the rewritten lines and the placeholder map.
fn assign_placeholders(
    lines: Vec<Vec<Tok>>,
) -> Result<(Vec<Vec<Tok>>, Vec<(String, String)>), AsmError> {
    // Pass 1: numeric label definitions, by line.
    let mut defs: HashMap<String, Vec<usize>> = HashMap::new();
    let mut def_at_line: HashMap<usize, (String, usize)> = HashMap::new();
    for (ln, toks) in lines.iter().enumerate() {
        if toks.len() >= 2 && toks[1].code() == Some(":") {
            if let Some(label) = toks[0].code() {
                if label.starts_with(|c: char| c.is_ascii_digit()) {
                    if !is_address_token(label) {
                        return Err(AsmError::MalformedLabel {
                            line: ln + 1,
                            label: label.to_string(),
                        });
                    }
                    let occ = defs.entry(label.to_string()).or_default();
                    def_at_line.insert(ln, (label.to_string(), occ.len()));
                    occ.push(ln);
                }
            }
        }
    }

    let resolve_ref = |tok: &str, ln: usize| -> Result<Option<LabelKey>, AsmError> {
        // `1b` is both a local reference and a hex address; it is a local
        // reference whenever label `1` exists.
        if let Some((num, forward)) = local_ref(tok).filter(|(num, _)| !defs.contains_key(tok) && defs.contains_key(*num)) {
            let lines_of = &defs[num];
            let pick = if forward {
                lines_of.iter().position(|&d| d > ln)
            } else {
                lines_of.iter().rposition(|&d| d <= ln)
            };
            return match pick {
                Some(occ) => Ok(Some(LabelKey::Def(num.to_string(), occ))),
                None => Err(AsmError::MalformedLabel {
                    line: ln + 1,
                    label: tok.to_string(),
                }),
            };
        }
        if is_address_token(tok) {
            return Ok(Some(if defs.contains_key(tok) {
                LabelKey::Def(tok.to_string(), 0)
            } else {
                LabelKey::Absolute(tok.to_string())
            }));
        }
        Ok(None)
    };

    // Pass 2: rewrite in first-occurrence order.
    let mut assigned: HashMap<LabelKey, String> = HashMap::new();
    let mut map: Vec<(String, String)> = Vec::new();
    let mut placeholder_for = |key: LabelKey, original: &str| -> String {
        if let Some(p) = assigned.get(&key) {
            return p.clone();
        }
        let p = format!("[INST-{}]", map.len() + 1);
        map.push((original.to_string(), p.clone()));
        assigned.insert(key, p.clone());
        p
    };

    let mut out = Vec::with_capacity(lines.len());
    for (ln, toks) in lines.into_iter().enumerate() {
        let mnem = mnemonic_index(&toks);
        let branch = toks
            .get(mnem)
            .and_then(Tok::code)
            .is_some_and(is_branch_mnemonic);
        let mut new_toks = Vec::with_capacity(toks.len());
        for (ti, tok) in toks.into_iter().enumerate() {
            let Tok::Code(text) = &tok else {
                new_toks.push(tok);
                continue;
            };
            let replaced = if is_placeholder(text) {
                Some(placeholder_for(LabelKey::Existing(text.clone()), text))
            } else if ti == 0 && def_at_line.contains_key(&ln) {
                let (label, occ) = def_at_line[&ln].clone();
                Some(placeholder_for(LabelKey::Def(label, occ), text))
            } else if branch && ti > mnem {
                resolve_ref(text, ln)?.map(|key| placeholder_for(key, text))
            } else {
                None
            };
            new_toks.push(Tok::Code(replaced.unwrap_or_else(|| text.clone())));
        }
        out.push(new_toks);
    }
    Ok((out, map))
}

/// Step 5, second half: `.L<family><n>` labels renumbered per family.
fn renumber_local_labels(lines: &mut [Vec<Tok>]) {
    let mut families: HashMap<String, HashMap<String, usize>> = HashMap::new();
    for toks in lines.iter_mut() {
        for tok in toks.iter_mut() {
            let Tok::Code(text) = tok else { continue };
            if !text.contains(".L") {
                continue;
            }
            *text = rewrite_local_labels(text, &mut families);
        }
    }
}

fn rewrite_local_labels(text: &str, families: &mut HashMap<String, HashMap<String, usize>>) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let boundary = i == 0 || !(chars[i - 1].is_ascii_alphanumeric() || chars[i - 1] == '_');
        if boundary && chars[i] == '.' && chars.get(i + 1) == Some(&'L') {
            let mut j = i + 2;
            while j < chars.len() && (chars[j].is_ascii_alphabetic() || chars[j] == '_') {
                j += 1;
            }
            let fam_end = j;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let clean_end = chars
                .get(j)
                .is_none_or(|c| !(c.is_ascii_alphanumeric() || *c == '_'));
            if j > fam_end && clean_end {
                let family: String = chars[i + 2..fam_end].iter().collect();
                let number: String = chars[fam_end..j].iter().collect();
                let table = families.entry(family.clone()).or_default();
                let next = table.len();
                let n = *table.entry(number).or_insert(next);
                out.push_str(&format!(".L{family}{n}"));
                i = j;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn is_instruction_line(toks: &[Tok]) -> bool {
    let mut idx = 0;
    // Skip any number of leading label definitions.
    while toks.len() >= idx + 2 && toks[idx + 1].code() == Some(":") {
        idx += 2;
    }
    match toks.get(idx) {
        Some(Tok::Code(t)) => !t.starts_with('.'),
        _ => false,
    }
}

/// Normalizes one assembly unit. See the module docs for the steps.
pub fn normalize_asm(raw: &RawAssemblyUnit) -> Result<NormalizedAsm, AsmError> {
    normalize_asm_text(&raw.text)
}

pub fn normalize_asm_text(text: &str) -> Result<NormalizedAsm, AsmError> {
    let stripped = strip_comments(text);
    let unprefixed = stripped.replace('%', "");
    let lines: Vec<Vec<Tok>> = unprefixed
        .lines()
        .map(|l| {
            tokenize_line(l)
                .into_iter()
                .map(|t| match t {
                    Tok::Code(c) => Tok::Code(rewrite_hex(&c)),
                    s => s,
                })
                .collect::<Vec<_>>()
        })
        .filter(|toks: &Vec<Tok>| !toks.is_empty())
        .collect();
    if !lines.iter().any(|l| is_instruction_line(l)) {
        return Err(AsmError::EmptyInput);
    }
    let (mut lines, placeholder_map) = assign_placeholders(lines)?;
    renumber_local_labels(&mut lines);
    let body = lines
        .iter()
        .map(|toks| toks.iter().map(Tok::text).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(NormalizedAsm {
        func_name: CANONICAL_NAME.to_string(),
        body,
        placeholder_map,
    })
}

/// Splits a normalized body into whitespace tokens, the unit used when
/// comparing two compilations token-wise.
pub fn asm_tokens(body: &str) -> Vec<String> {
    body.split_whitespace().map(str::to_string).collect()
}

/// Mnemonics of the instruction lines of a normalized body, in order.
pub fn opcodes(body: &str) -> Vec<&str> {
    body.lines()
        .filter_map(|line| {
            let toks: Vec<&str> = line.split(' ').collect();
            let mut idx = 0;
            while toks.len() >= idx + 2 && toks[idx + 1] == ":" {
                idx += 2;
            }
            let t = *toks.get(idx)?;
            (!t.starts_with('.') && !t.starts_with('"')).then_some(t)
        })
        .collect()
}

/// Metadata stamped on every slice produced by [`slice_functions`].
#[derive(Debug, Clone, Default)]
pub struct SliceMeta {
    pub origin_path: String,
    pub compiler_id: String,
    pub opt_level: Option<OptLevel>,
}

#[derive(Debug, Clone, Default)]
pub struct SliceReport {
    pub units: Vec<RawAssemblyUnit>,
    pub missing: Vec<AsmError>,
}

fn label_name(line: &str) -> Option<&str> {
    let code = line.split(['#', ';']).next().unwrap_or("");
    let t = code.trim_start();
    let colon = t.find(':')?;
    let name = t[..colon].trim_end();
    let valid = !name.is_empty()
        && name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '.' || c == '$')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '@'));
    valid.then_some(name)
}

fn declared_functions(listing: &str) -> Vec<String> {
    listing
        .lines()
        .filter_map(|l| {
            let t = l.trim();
            let rest = t.strip_prefix(".type")?;
            let mut parts = rest.split(',');
            let name = parts.next()?.trim();
            let kind = parts.next()?.trim();
            (kind == "@function" || kind == "%function" || kind == "STT_FUNC")
                .then(|| name.to_string())
        })
        .collect()
}

fn is_size_directive_for(line: &str, symbol: &str) -> bool {
    line.trim()
        .strip_prefix(".size")
        .and_then(|r| r.split(',').next())
        .is_some_and(|n| n.trim() == symbol)
}

/// Replaces whole-symbol occurrences of `from` with `to`.
pub(crate) fn rename_symbol(text: &str, from: &str, to: &str) -> String {
    if from.is_empty() || from == to {
        return text.to_string();
    }
    let is_sym = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '$';
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut prev: Option<char> = None;
    while let Some(pos) = rest.find(from) {
        let before = rest[..pos].chars().last().or(prev);
        let after = rest[pos + from.len()..].chars().next();
        let ok_before = before.is_none_or(|c| !is_sym(c) && c != '.');
        let ok_after = after.is_none_or(|c| !is_sym(c));
        out.push_str(&rest[..pos]);
        if ok_before && ok_after {
            out.push_str(to);
        } else {
            out.push_str(from);
        }
        prev = from.chars().last();
        rest = &rest[pos + from.len()..];
    }
    out.push_str(rest);
    out
}

/// Cuts a whole-file listing into one unit per requested symbol.
///
/// A slice runs from the symbol's label to the next function label, or to
/// the symbol's `.size` directive when that comes first. Function labels are
/// the names declared with `.type name, @function`; listings without `.type`
/// directives treat every label not starting with `.` as a function label.
/// Inside each slice the symbol is renamed to `func0`.
pub fn slice_functions(listing: &str, symbols: &[&str], meta: &SliceMeta) -> SliceReport {
    let lines: Vec<&str> = listing.lines().collect();
    let declared = declared_functions(listing);
    let function_label_lines: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| label_name(l).map(|n| (i, n)))
        .filter(|(_, n)| {
            if declared.is_empty() {
                !n.starts_with('.')
            } else {
                declared.iter().any(|d| d == n)
            }
        })
        .collect();

    let mut report = SliceReport::default();
    for &symbol in symbols {
        let Some(pos) = function_label_lines.iter().position(|(_, n)| *n == symbol) else {
            report.missing.push(AsmError::SymbolNotFound(symbol.to_string()));
            continue;
        };
        let start = function_label_lines[pos].0;
        let mut end = function_label_lines
            .get(pos + 1)
            .map_or(lines.len(), |(i, _)| *i);
        if let Some(size_at) = (start..end).find(|&i| is_size_directive_for(lines[i], symbol)) {
            end = size_at + 1;
        }
        let text = lines[start..end].join("\n");
        report.units.push(RawAssemblyUnit {
            origin_path: meta.origin_path.clone(),
            compiler_id: meta.compiler_id.clone(),
            opt_level: meta.opt_level.unwrap_or(OptLevel::O0),
            text: rename_symbol(&text, symbol, CANONICAL_NAME),
        });
    }
    report
}

/// Lines of a raw listing that hold instructions (not labels, directives or
/// comments), trimmed. Used for partition checks.
pub fn instruction_lines(listing: &str) -> Vec<String> {
    strip_comments(listing)
        .lines()
        .filter_map(|l| {
            let toks = tokenize_line(l);
            is_instruction_line(&toks).then(|| l.trim().to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(text: &str) -> NormalizedAsm {
        normalize_asm_text(text).unwrap()
    }

    #[test]
    fn prefix_removal_and_punctuation_spacing() {
        assert_eq!(norm("movq %rax, %rbx").body, "movq rax , rbx");
    }

    #[test]
    fn hex_literals_become_decimal() {
        assert_eq!(norm("movl $0x10, %eax").body, "movl $16 , eax");
        assert_eq!(norm("movl $0xFF, %eax").body, "movl $255 , eax");
        assert_eq!(norm("movl -0x8(%rbp), %eax").body, "movl -8 ( rbp ) , eax");
    }

    #[test]
    fn hex_inside_identifiers_is_kept() {
        assert_eq!(norm("call foo0x10").body, "call foo0x10");
        assert_eq!(norm("movl $0x1fg, %eax").body, "movl $0x1fg , eax");
    }

    #[test]
    fn very_wide_hex_literal() {
        let lit = format!("0x1{}", "0".repeat(40));
        let body = norm(&format!("movabs ${lit}, %rax")).body;
        // 16^40 = 2^160
        assert_eq!(body, "movabs $1461501637330902918203684832716283019655932542976 , rax");
    }

    #[test]
    fn comments_are_stripped() {
        let n = norm("movl $1, %eax # set\n/* block\n comment */ ret ; done");
        assert_eq!(n.body, "movl $1 , eax\nret");
    }

    #[test]
    fn hash_inside_string_is_not_a_comment() {
        let n = norm(".string \"a#b, c\"\nret");
        assert_eq!(n.body, ".string \"a#b, c\"\nret");
    }

    #[test]
    fn three_line_listing_with_two_address_labels() {
        // Hand application of the six steps:
        //   "10: movl $0x10, %eax   # load" -> "10 : movl $16 , eax" -> "[INST-1] : movl $16 , eax"
        //   "20: addl %eax, %ebx"           -> "[INST-2] : addl eax , ebx"
        //   "    jmp 10"                    -> "jmp [INST-1]"
        let n = norm("10: movl $0x10, %eax   # load\n20: addl %eax, %ebx\n    jmp 10\n");
        assert_eq!(
            n.body,
            "[INST-1] : movl $16 , eax\n[INST-2] : addl eax , ebx\njmp [INST-1]"
        );
        assert_eq!(
            n.placeholder_map,
            vec![
                ("10".to_string(), "[INST-1]".to_string()),
                ("20".to_string(), "[INST-2]".to_string())
            ]
        );
    }

    #[test]
    fn gas_local_references_resolve_by_direction() {
        let n = norm("1: nop\n jmp 1f\n jmp 1b\n1: ret");
        assert_eq!(n.body, "[INST-1] : nop\njmp [INST-2]\njmp [INST-1]\n[INST-2] : ret");
    }

    #[test]
    fn local_reference_without_target_in_direction_is_malformed() {
        assert!(matches!(
            normalize_asm_text("3: nop\njmp 3f"),
            Err(AsmError::MalformedLabel { .. })
        ));
    }

    #[test]
    fn undefined_hex_target_ending_in_b_is_an_address() {
        let n = norm("401170: movapd xmm3, xmm0\n401174: ja 40117b\n401176: ret");
        assert_eq!(n.placeholder_map.len(), 4);
        assert!(n.body.contains("ja [INST-3]"), "{}", n.body);
    }

    #[test]
    fn digit_label_with_junk_is_malformed() {
        assert_eq!(
            normalize_asm_text("12z: nop"),
            Err(AsmError::MalformedLabel {
                line: 1,
                label: "12z".into()
            })
        );
    }

    #[test]
    fn named_labels_are_renumbered_per_family() {
        let n = norm("movl .LC5(%rip), %eax\n.L7:\n jmp .L3\n.L3:\n jmp .L7");
        assert_eq!(
            n.body,
            "movl .LC0 ( rip ) , eax\n.L0 :\njmp .L1\n.L1 :\njmp .L0"
        );
    }

    #[test]
    fn directives_only_is_empty_input() {
        assert_eq!(
            normalize_asm_text(".text\n.globl f\n# nothing\nf:\n"),
            Err(AsmError::EmptyInput)
        );
        assert_eq!(normalize_asm_text(""), Err(AsmError::EmptyInput));
    }

    #[test]
    fn normalization_is_idempotent_on_sample() {
        let n = norm("10: movl $0x10, %eax\n 20: jmp 10\n.L2: call printf@PLT");
        let again = normalize_asm_text(&n.body).unwrap();
        assert_eq!(again.body, n.body);
        assert_eq!(again.placeholder_map.len(), n.placeholder_map.len());
    }

    const TWO_FUNCS: &str = "\t.text
\t.globl\tadd
\t.type\tadd, @function
add:
.LFB0:
\tpushq\t%rbp
\tmovl\t%edi, -4(%rbp)
\tmovl\t-4(%rbp), %eax
\tpopq\t%rbp
\tret
\t.size\tadd, .-add
\t.globl\tsub
\t.type\tsub, @function
sub:
.LFB1:
\tpushq\t%rbp
\tsubl\t%esi, %edi
\tmovl\t%edi, %eax
\tpopq\t%rbp
\tret
\t.size\tsub, .-sub
\t.ident\t\"GCC\"
";

    #[test]
    fn slicing_a_single_function_file() {
        let src = "\t.type\tf, @function\nf:\n\tmovl\t$1, %eax\n\tret\n";
        let r = slice_functions(src, &["f"], &SliceMeta::default());
        assert!(r.missing.is_empty());
        assert_eq!(r.units.len(), 1);
        assert_eq!(r.units[0].text, "func0:\n\tmovl\t$1, %eax\n\tret");
    }

    #[test]
    fn slicing_partitions_instruction_lines() {
        let r = slice_functions(TWO_FUNCS, &["add", "sub"], &SliceMeta::default());
        assert_eq!(r.units.len(), 2);
        let mut joined = instruction_lines(&r.units[0].text);
        joined.extend(instruction_lines(&r.units[1].text));
        assert_eq!(joined, instruction_lines(TWO_FUNCS));
        assert!(r.units[1].text.starts_with("func0:"));
        assert!(!r.units[0].text.contains(".ident"));
    }

    #[test]
    fn missing_symbol_is_reported_not_fatal() {
        let r = slice_functions(TWO_FUNCS, &["absent"], &SliceMeta::default());
        assert!(r.units.is_empty());
        assert_eq!(r.missing, vec![AsmError::SymbolNotFound("absent".into())]);
        let r = slice_functions(TWO_FUNCS, &["absent", "sub"], &SliceMeta::default());
        assert_eq!(r.units.len(), 1);
        assert_eq!(r.missing.len(), 1);
    }

    #[test]
    fn rename_respects_symbol_boundaries() {
        assert_eq!(
            rename_symbol("call add\naddl %eax\ncall add@PLT\n.Ladd", "add", "func0"),
            "call func0\naddl %eax\ncall func0@PLT\n.Ladd"
        );
    }

    #[test]
    fn opt_level_parsing() {
        assert_eq!("-O2".parse::<OptLevel>().unwrap(), OptLevel::O2);
        assert_eq!("o3".parse::<OptLevel>().unwrap(), OptLevel::O3);
        assert!("O4".parse::<OptLevel>().is_err());
        assert_eq!(OptLevel::O1.to_string(), "O1");
    }
}
