//! Failure classification into seven error categories, category
//! distributions, and transition counts between two runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::ExecStatus;

const DEFAULT_PATTERNS: &str = include_str!("../data/triage_patterns.toml");

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("pattern file: {0}")]
    PatternFile(String),
    #[error("bad pattern {id}: {message}")]
    BadPattern { id: String, message: String },
    #[error("groups without failures: {0:?}")]
    EmptyGroup(Vec<String>),
    #[error("sample sets differ: only in A {only_a:?}, only in B {only_b:?}")]
    SampleSetMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Assert,
    Syntax,
    Return,
    Type,
    Declaration,
    RuntimeLink,
    Other,
}

impl ErrorCategory {
    /// Precedence order.
    pub const ALL: [ErrorCategory; 7] = [
        ErrorCategory::Assert,
        ErrorCategory::Syntax,
        ErrorCategory::Return,
        ErrorCategory::Type,
        ErrorCategory::Declaration,
        ErrorCategory::RuntimeLink,
        ErrorCategory::Other,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ErrorCategory::Assert => "assert",
            ErrorCategory::Syntax => "syntax",
            ErrorCategory::Return => "return",
            ErrorCategory::Type => "type",
            ErrorCategory::Declaration => "declaration",
            ErrorCategory::RuntimeLink => "runtime_link",
            ErrorCategory::Other => "other",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorCategory::Assert => "Assert",
            ErrorCategory::Syntax => "Syntax",
            ErrorCategory::Return => "Return",
            ErrorCategory::Type => "Type",
            ErrorCategory::Declaration => "Declaration",
            ErrorCategory::RuntimeLink => "Runtime/Link",
            ErrorCategory::Other => "Other",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace(['/', '-'], "_");
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.key() == norm)
            .ok_or_else(|| format!("unknown error category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedFailure {
    pub sample_id: String,
    pub category: ErrorCategory,
    pub matched_pattern: String,
    /// `None` when no candidate could be extracted, so nothing ran.
    pub source_status: Option<ExecStatus>,
}

#[derive(Debug, Deserialize)]
struct PatternFile {
    version: u32,
    #[serde(default)]
    pattern: Vec<PatternSpec>,
}

#[derive(Debug, Deserialize)]
struct PatternSpec {
    id: String,
    category: String,
    regex: String,
}

/// Compiled pattern sets in precedence order.
#[derive(Debug, Clone)]
pub struct Classifier {
    sets: Vec<(ErrorCategory, Vec<(String, Regex)>)>,
}

pub const PATTERN_TIMEOUT: &str = "status.timeout";
pub const PATTERN_OUTPUT_MISMATCH: &str = "status.output-mismatch";
pub const PATTERN_NO_SOURCE: &str = "extraction.none";
pub const PATTERN_OTHER: &str = "other";

fn is_noise(line: &str) -> bool {
    let l = line.trim_start();
    l.is_empty()
        || line.contains(": warning:")
        || line.contains(": note:")
        || l.starts_with('|')
        || l.split_once('|').is_some_and(|(n, _)| !n.is_empty() && n.trim().chars().all(|c| c.is_ascii_digit()))
}

impl Classifier {
    pub fn from_toml(text: &str) -> Result<Self, TriageError> {
        let file: PatternFile = toml::from_str(text).map_err(|e| TriageError::PatternFile(e.to_string()))?;
        if file.version != 1 {
            return Err(TriageError::PatternFile(format!("unsupported version {}", file.version)));
        }
        let mut sets: Vec<(ErrorCategory, Vec<(String, Regex)>)> = ErrorCategory::ALL
            .into_iter()
            .filter(|c| *c != ErrorCategory::Other)
            .map(|c| (c, Vec::new()))
            .collect();
        let mut ids = BTreeSet::new();
        for p in file.pattern {
            let bad = |message: String| TriageError::BadPattern {
                id: p.id.clone(),
                message,
            };
            if !ids.insert(p.id.clone()) {
                return Err(bad("duplicate id".into()));
            }
            let cat: ErrorCategory = p.category.parse().map_err(bad)?;
            if cat == ErrorCategory::Other {
                return Err(bad("other is the fallback and takes no patterns".into()));
            }
            let re = RegexBuilder::new(&p.regex)
                .case_insensitive(true)
                .build()
                .map_err(|e| bad(e.to_string()))?;
            sets.iter_mut()
                .find(|(c, _)| *c == cat)
                .expect("every category has a set")
                .1
                .push((p.id, re));
        }
        Ok(Classifier { sets })
    }

    pub fn load(path: &Path) -> Result<Self, TriageError> {
        let text = std::fs::read_to_string(path).map_err(|e| TriageError::PatternFile(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn match_lines<'a>(&'a self, lines: &[&str]) -> Option<(ErrorCategory, &'a str)> {
        for (cat, pats) in &self.sets {
            // Pattern order inside a category must not matter, so report the
            // smallest matching id.
            let hit = pats
                .iter()
                .filter(|(_, re)| lines.iter().any(|l| re.is_match(l)))
                .map(|(id, _)| id.as_str())
                .min();
            if let Some(id) = hit {
                return Some((*cat, id));
            }
        }
        None
    }

    /// Category and pattern id for a failed outcome; `None` for `Pass`.
    ///
    /// Warnings, notes and source excerpts are ignored unless nothing else
    /// matches.
    pub fn classify(&self, stderr: &str, status: ExecStatus) -> Option<(ErrorCategory, String)> {
        match status {
            ExecStatus::Pass => return None,
            s if s.is_timeout() => return Some((ErrorCategory::RuntimeLink, PATTERN_TIMEOUT.into())),
            ExecStatus::OutputMismatch => {
                return Some((ErrorCategory::Assert, PATTERN_OUTPUT_MISMATCH.into()));
            }
            _ => {}
        }
        let all: Vec<&str> = stderr.lines().collect();
        let relevant: Vec<&str> = all.iter().copied().filter(|l| !is_noise(l)).collect();
        let hit = self.match_lines(&relevant).or_else(|| self.match_lines(&all));
        Some(match hit {
            Some((cat, id)) => (cat, id.to_string()),
            None => (ErrorCategory::Other, PATTERN_OTHER.into()),
        })
    }

    pub fn classify_failure(
        &self,
        sample_id: &str,
        stderr: &str,
        status: ExecStatus,
    ) -> Option<ClassifiedFailure> {
        self.classify(stderr, status).map(|(category, matched_pattern)| ClassifiedFailure {
            sample_id: sample_id.to_string(),
            category,
            matched_pattern,
            source_status: Some(status),
        })
    }

    pub fn pattern_count(&self) -> usize {
        self.sets.iter().map(|(_, p)| p.len()).sum()
    }
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::from_toml(DEFAULT_PATTERNS).expect("shipped patterns are valid")
    }
}

/// The failure record for a sample whose response held no usable source.
pub fn extraction_failure(sample_id: &str) -> ClassifiedFailure {
    ClassifiedFailure {
        sample_id: sample_id.to_string(),
        category: ErrorCategory::Other,
        matched_pattern: PATTERN_NO_SOURCE.into(),
        source_status: None,
    }
}

/// Per-group category frequencies over failed cases. Every group listed in
/// `groups` must have at least one failure.
pub fn distribution(
    failures: &[(String, ErrorCategory)],
    groups: &[String],
) -> Result<BTreeMap<String, BTreeMap<ErrorCategory, f64>>, TriageError> {
    let mut counts: BTreeMap<String, BTreeMap<ErrorCategory, usize>> = BTreeMap::new();
    for (g, c) in failures {
        *counts.entry(g.clone()).or_default().entry(*c).or_default() += 1;
    }
    let empty: Vec<String> = groups.iter().filter(|g| !counts.contains_key(*g)).cloned().collect();
    if !empty.is_empty() {
        return Err(TriageError::EmptyGroup(empty));
    }
    Ok(counts
        .into_iter()
        .map(|(g, cats)| {
            let total: usize = cats.values().sum();
            let freqs = cats
                .into_iter()
                .map(|(c, n)| (c, n as f64 / total as f64))
                .collect();
            (g, freqs)
        })
        .collect())
}

/// A sample's result in one run: an error category or success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Failed(ErrorCategory),
    Success,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 8] = [
        OutcomeLabel::Failed(ErrorCategory::Assert),
        OutcomeLabel::Failed(ErrorCategory::Syntax),
        OutcomeLabel::Failed(ErrorCategory::Return),
        OutcomeLabel::Failed(ErrorCategory::Type),
        OutcomeLabel::Failed(ErrorCategory::Declaration),
        OutcomeLabel::Failed(ErrorCategory::RuntimeLink),
        OutcomeLabel::Failed(ErrorCategory::Other),
        OutcomeLabel::Success,
    ];

    pub fn index(self) -> usize {
        match self {
            OutcomeLabel::Failed(c) => ErrorCategory::ALL.iter().position(|x| *x == c).expect("listed"),
            OutcomeLabel::Success => 7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OutcomeLabel::Failed(c) => c.label(),
            OutcomeLabel::Success => "Success",
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// `counts[from][to]`, indexed by [`OutcomeLabel::index`].
    pub counts: [[u64; 8]; 8],
}

/// One (from, to, count) triple, for flow diagrams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub from: String,
    pub to: String,
    pub count: u64,
}

impl TransitionMatrix {
    pub fn get(&self, from: OutcomeLabel, to: OutcomeLabel) -> u64 {
        self.counts[from.index()][to.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, from: OutcomeLabel) -> u64 {
        self.counts[from.index()].iter().sum()
    }

    pub fn column_sum(&self, to: OutcomeLabel) -> u64 {
        self.counts.iter().map(|r| r[to.index()]).sum()
    }

    /// Non-zero cells in row-major label order.
    pub fn flows(&self) -> Vec<FlowRecord> {
        let mut out = Vec::new();
        for from in OutcomeLabel::ALL {
            for to in OutcomeLabel::ALL {
                let count = self.get(from, to);
                if count > 0 {
                    out.push(FlowRecord {
                        from: from.label().into(),
                        to: to.label().into(),
                        count,
                    });
                }
            }
        }
        out
    }
}

pub fn transitions(
    run_a: &BTreeMap<String, OutcomeLabel>,
    run_b: &BTreeMap<String, OutcomeLabel>,
) -> Result<TransitionMatrix, TriageError> {
    let only_a: Vec<String> = run_a.keys().filter(|k| !run_b.contains_key(*k)).cloned().collect();
    let only_b: Vec<String> = run_b.keys().filter(|k| !run_a.contains_key(*k)).cloned().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(TriageError::SampleSetMismatch { only_a, only_b });
    }
    let mut m = TransitionMatrix::default();
    for (id, a) in run_a {
        m.counts[a.index()][run_b[id].index()] += 1;
    }
    Ok(m)
}
