//! The retrieval corpus: normalized (assembly, source) pairs with functional
//! tags and structural metrics, deduplicated by content hash.
//!
//! On disk a corpus is a JSON-lines file, one [`CorpusRecord`] per line with
//! the fields in this order: `id`, `asm_body`, `src_body`, `tags`, `metrics`,
//! `provenance`, `original_name`, `placeholders`. Records are sorted by id.
//! The manifest is a separate pretty-printed JSON summary.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asmnorm::{self, CanonicalSource, NormalizedAsm, OptLevel, RawAssemblyUnit};
use crate::ctoken::{self, Token, TokenKind};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("could not parse source: {0}")]
    ParseFailure(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus record on line {line}: {message}")]
    BadRecord { line: usize, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionTag {
    Algorithm,
    String,
    Io,
    System,
    Math,
}

impl FunctionTag {
    pub const ALL: [FunctionTag; 5] = [
        FunctionTag::Algorithm,
        FunctionTag::String,
        FunctionTag::Io,
        FunctionTag::System,
        FunctionTag::Math,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionTag::Algorithm => "algorithm",
            FunctionTag::String => "string",
            FunctionTag::Io => "io",
            FunctionTag::System => "system",
            FunctionTag::Math => "math",
        }
    }

    /// Bit used by compact encodings (index file, C ABI).
    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for FunctionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FunctionTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| format!("unknown tag `{s}`"))
    }
}

pub type TagSet = BTreeSet<FunctionTag>;

pub fn tags_to_mask(tags: &TagSet) -> u8 {
    tags.iter().fold(0, |m, t| m | t.bit())
}

pub fn tags_from_mask(mask: u8) -> TagSet {
    FunctionTag::ALL
        .into_iter()
        .filter(|t| mask & t.bit() != 0)
        .collect()
}

struct TagFeatures {
    tag: FunctionTag,
    headers: &'static [&'static str],
    idents: &'static [&'static str],
    /// Matched only in `std::name` form. Bare `pow`/`sqrt` in C code are math,
    /// the qualified C++ forms count as algorithmic utilities.
    qualified: &'static [&'static str],
}

const FEATURES: &[TagFeatures] = &[
    TagFeatures {
        tag: FunctionTag::Algorithm,
        headers: &["algorithm", "vector", "numeric"],
        idents: &["sort", "qsort", "push_back", "accumulate", "bsearch"],
        qualified: &["vector", "sort", "accumulate", "pow", "sqrt"],
    },
    TagFeatures {
        tag: FunctionTag::String,
        headers: &["string.h", "strings.h", "string", "regex", "regex.h"],
        idents: &[
            "strlen", "strcmp", "strncmp", "strcpy", "strncpy", "strcat", "strncat", "strchr",
            "strrchr", "strstr", "strtok", "strdup", "regex", "regcomp", "regexec", "substr",
        ],
        qualified: &[],
    },
    TagFeatures {
        tag: FunctionTag::Io,
        headers: &["stdio.h", "cstdio", "iostream", "fstream"],
        idents: &[
            "printf", "fprintf", "sprintf", "snprintf", "scanf", "fscanf", "sscanf", "puts",
            "fputs", "putchar", "getchar", "fgets", "gets", "fopen", "fclose", "fread", "fwrite",
            "cout", "cin", "cerr",
        ],
        qualified: &[],
    },
    TagFeatures {
        tag: FunctionTag::System,
        headers: &[
            "unistd.h", "fcntl.h", "sys/mman.h", "sys/types.h", "sys/stat.h", "sys/syscall.h",
        ],
        idents: &[
            "open", "read", "write", "close", "lseek", "mmap", "munmap", "memcpy", "memmove",
            "memset", "fork", "execve", "getpid", "ioctl", "syscall",
        ],
        qualified: &[],
    },
    TagFeatures {
        tag: FunctionTag::Math,
        headers: &["math.h", "cmath"],
        idents: &[
            "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "pow", "sqrt", "log", "log2",
            "log10", "exp", "fabs", "floor", "ceil", "fmod", "round", "hypot", "cbrt",
        ],
        qualified: &[],
    },
];

/// Tags from a bag of identifiers, `std::`-qualified names and header names.
pub fn tag_features<'a>(
    idents: impl IntoIterator<Item = &'a str>,
    qualified: impl IntoIterator<Item = &'a str>,
    headers: &[String],
) -> TagSet {
    let idents: HashSet<&str> = idents.into_iter().collect();
    let qualified: HashSet<&str> = qualified.into_iter().collect();
    FEATURES
        .iter()
        .filter(|f| {
            f.idents.iter().any(|i| idents.contains(i))
                || f.qualified.iter().any(|q| qualified.contains(q))
                || f.headers.iter().any(|h| headers.iter().any(|x| x == h))
        })
        .map(|f| f.tag)
        .collect()
}

/// Tags a canonical source from its identifier tokens and the header names
/// that were included before canonicalization.
pub fn tag_source(src: &CanonicalSource, original_includes: &[String]) -> TagSet {
    let tokens = ctoken::lex(&src.body).unwrap_or_default();
    tag_tokens(&tokens, original_includes)
}

fn tag_tokens(tokens: &[Token], headers: &[String]) -> TagSet {
    let mut plain = Vec::new();
    let mut qualified = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Ident {
            continue;
        }
        let is_qualified = i >= 2 && tokens[i - 1].is_punct("::") && tokens[i - 2].is_ident("std");
        if is_qualified {
            qualified.push(t.text.as_str());
        } else {
            plain.push(t.text.as_str());
        }
    }
    tag_features(plain, qualified, headers)
}

/// Tags an assembly body from its call targets (`call strlen@PLT` -> `strlen`).
/// Used for targets whose source is unknown.
pub fn tag_asm(asm: &NormalizedAsm) -> TagSet {
    let callees: Vec<&str> = asm
        .body
        .lines()
        .filter_map(|line| {
            let mut parts = line.split(' ');
            let mnem = parts.next()?;
            mnem.starts_with("call").then(|| parts.next()).flatten()
        })
        .map(|target| target.split('@').next().unwrap_or(target))
        .collect();
    tag_features(callees, std::iter::empty(), &[])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    pub loc: usize,
    pub cyclomatic: usize,
    pub basic_blocks: usize,
}

const DECISION_KEYWORDS: &[&str] = &["if", "for", "while", "case"];
const DECISION_PUNCTS: &[&str] = &["&&", "||", "?"];
const JOIN_KEYWORDS: &[&str] = &["if", "for", "while", "switch"];

/// Count of decision tokens: `if`, `for`, `while`, `case`, `&&`, `||`, `?`.
pub fn decision_tokens(tokens: &[Token]) -> usize {
    tokens
        .iter()
        .filter(|t| {
            (t.kind == TokenKind::Ident && DECISION_KEYWORDS.contains(&t.text.as_str()))
                || (t.kind == TokenKind::Punct && DECISION_PUNCTS.contains(&t.text.as_str()))
        })
        .count()
}

/// Token-level structural metrics.
///
/// * `loc`: non-blank lines of the canonical body.
/// * `cyclomatic`: 1 + decision tokens (`if`, `for`, `while`, `case`, `&&`,
///   `||`, `?`). `else` and `default` add nothing; a `do ... while` counts
///   once through its `while`.
/// * `basic_blocks`: 1 + decision tokens + join points, where every `if`,
///   `for`, `while`, `switch` and `?` contributes one join/exit block.
pub fn compute_metrics(src: &CanonicalSource) -> Result<StructuralMetrics, CorpusError> {
    let tokens = ctoken::lex(&src.body).map_err(|e| CorpusError::ParseFailure(e.to_string()))?;
    ctoken::check_balanced(&tokens).map_err(|e| CorpusError::ParseFailure(e.to_string()))?;
    let decisions = decision_tokens(&tokens);
    let joins = tokens
        .iter()
        .filter(|t| {
            (t.kind == TokenKind::Ident && JOIN_KEYWORDS.contains(&t.text.as_str()))
                || t.is_punct("?")
        })
        .count();
    let loc = src.body.lines().filter(|l| !l.trim().is_empty()).count();
    Ok(StructuralMetrics {
        loc: loc.max(1),
        cyclomatic: 1 + decisions,
        basic_blocks: 1 + decisions + joins,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub compiler_id: String,
    pub opt_level: OptLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPair {
    pub id: String,
    pub asm: NormalizedAsm,
    pub src: CanonicalSource,
    pub tags: TagSet,
    pub metrics: StructuralMetrics,
    pub provenance: Provenance,
}

/// Hex SHA-256 over `asm_body || 0x00 || src_body`.
pub fn content_id(asm_body: &str, src_body: &str) -> String {
    let mut h = Sha256::new();
    h.update(asm_body.as_bytes());
    h.update([0u8]);
    h.update(src_body.as_bytes());
    hex::encode(h.finalize())
}

/// On-disk form of a [`CorpusPair`]; field order is the file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub asm_body: String,
    pub src_body: String,
    pub tags: Vec<FunctionTag>,
    pub metrics: StructuralMetrics,
    pub provenance: Provenance,
    pub original_name: String,
    pub placeholders: Vec<(String, String)>,
}

impl From<&CorpusPair> for CorpusRecord {
    fn from(p: &CorpusPair) -> Self {
        CorpusRecord {
            id: p.id.clone(),
            asm_body: p.asm.body.clone(),
            src_body: p.src.body.clone(),
            tags: p.tags.iter().copied().collect(),
            metrics: p.metrics,
            provenance: p.provenance.clone(),
            original_name: p.src.original_name.clone(),
            placeholders: p.asm.placeholder_map.clone(),
        }
    }
}

impl From<CorpusRecord> for CorpusPair {
    fn from(r: CorpusRecord) -> Self {
        CorpusPair {
            id: r.id,
            asm: NormalizedAsm {
                func_name: asmnorm::CANONICAL_NAME.to_string(),
                body: r.asm_body,
                placeholder_map: r.placeholders,
            },
            src: CanonicalSource {
                func_name: asmnorm::CANONICAL_NAME.to_string(),
                body: r.src_body,
                original_name: r.original_name,
            },
            tags: r.tags.into_iter().collect(),
            metrics: r.metrics,
            provenance: r.provenance,
        }
    }
}

/// A deduplicated corpus, sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pairs: Vec<CorpusPair>,
}

impl Corpus {
    /// Builds from arbitrary pairs: keeps the first of each id, sorts by id.
    pub fn from_pairs(pairs: impl IntoIterator<Item = CorpusPair>) -> Self {
        let mut seen = HashSet::new();
        let mut kept: Vec<CorpusPair> = pairs
            .into_iter()
            .filter(|p| seen.insert(p.id.clone()))
            .collect();
        kept.sort_by(|a, b| a.id.cmp(&b.id));
        Corpus { pairs: kept }
    }

    pub fn pairs(&self) -> &[CorpusPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusPair> {
        self.pairs
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.pairs.iter().map(|p| p.id.clone()).collect()
    }

    /// Adds a pair unless its id is already present. Returns whether it was added.
    pub fn insert(&mut self, pair: CorpusPair) -> bool {
        match self.pairs.binary_search_by(|p| p.id.cmp(&pair.id)) {
            Ok(_) => false,
            Err(pos) => {
                self.pairs.insert(pos, pair);
                true
            }
        }
    }

    pub fn write_jsonl(&self, w: &mut impl Write) -> std::io::Result<()> {
        for p in &self.pairs {
            serde_json::to_writer(&mut *w, &CorpusRecord::from(p))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CorpusError::io(path, e))
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self, CorpusError> {
        let mut pairs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::BadRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CorpusRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::BadRecord {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            pairs.push(CorpusPair::from(rec));
        }
        Ok(Corpus::from_pairs(pairs))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let f = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
        Corpus::read_jsonl(BufReader::new(f))
    }
}

/// One raw item handed to [`build_corpus`].
#[derive(Debug, Clone)]
pub struct CorpusInput {
    pub asm: RawAssemblyUnit,
    pub source: String,
    pub dataset: String,
}

/// Compiler identification from a listing's `.ident` directive.
pub fn listing_compiler_id(listing: &str) -> Option<String> {
    listing.lines().find_map(|l| {
        let rest = l.trim().strip_prefix(".ident")?.trim();
        Some(rest.trim_matches('"').to_string())
    })
}

/// Reads corpus inputs from a directory holding `NAME.c` sources next to
/// `NAME.OL.s` listings (`OL` one of O0..O3). Each listing must define
/// `func0`. Listings without a matching source are skipped with a reason.
pub fn inputs_from_dir(dir: &Path, dataset: &str) -> Result<(Vec<CorpusInput>, Vec<SkippedItem>), CorpusError> {
    let mut listings: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CorpusError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "s"))
        .collect();
    listings.sort();
    let mut inputs = Vec::new();
    let mut skipped = Vec::new();
    for (index, path) in listings.iter().enumerate() {
        let origin = path.display().to_string();
        let mut skip = |reason: String| {
            skipped.push(SkippedItem {
                index,
                origin: origin.clone(),
                reason,
            })
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((name, level)) = stem.rsplit_once('.') else {
            skip("file name is not NAME.OL.s".into());
            continue;
        };
        let Ok(opt_level) = level.parse::<OptLevel>() else {
            skip(format!("unknown optimization level {level:?}"));
            continue;
        };
        let src_path = dir.join(format!("{name}.c"));
        let Ok(source) = fs::read_to_string(&src_path) else {
            skip(format!("no readable {}", src_path.display()));
            continue;
        };
        let listing = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let meta = asmnorm::SliceMeta {
            origin_path: origin.clone(),
            compiler_id: listing_compiler_id(&listing).unwrap_or_else(|| "unknown".into()),
            opt_level: Some(opt_level),
        };
        let mut report = asmnorm::slice_functions(&listing, &[asmnorm::CANONICAL_NAME], &meta);
        match report.units.pop() {
            Some(asm) => inputs.push(CorpusInput {
                asm,
                source,
                dataset: dataset.to_string(),
            }),
            None => skip(format!("listing does not define {}", asmnorm::CANONICAL_NAME)),
        }
    }
    Ok((inputs, skipped))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedItem {
    pub index: usize,
    pub origin: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub total_pairs: usize,
    pub duplicates_dropped: usize,
    pub tag_counts: BTreeMap<FunctionTag, usize>,
    pub untagged: usize,
    pub skipped: Vec<SkippedItem>,
}

impl CorpusManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Tag with the largest count; ties go to the earlier tag.
    pub fn dominant_tag(&self) -> Option<FunctionTag> {
        let best = self.tag_counts.values().copied().max().filter(|&c| c > 0)?;
        self.tag_counts
            .iter()
            .find(|(_, &c)| c == best)
            .map(|(t, _)| *t)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusBuild {
    pub corpus: Corpus,
    pub manifest: CorpusManifest,
}

/// Normalizes, tags, measures and hashes one item.
pub fn make_pair(input: &CorpusInput) -> Result<CorpusPair, String> {
    let asm = asmnorm::normalize_asm(&input.asm).map_err(|e| format!("assembly: {e}"))?;
    let includes = ctoken::include_headers(&input.source);
    let src = asmnorm::canonicalize_source(&input.source).map_err(|e| format!("source: {e}"))?;
    let metrics = compute_metrics(&src).map_err(|e| format!("metrics: {e}"))?;
    let tags = tag_source(&src, &includes);
    Ok(CorpusPair {
        id: content_id(&asm.body, &src.body),
        asm,
        src,
        tags,
        metrics,
        provenance: Provenance {
            dataset: input.dataset.clone(),
            compiler_id: input.asm.compiler_id.clone(),
            opt_level: input.asm.opt_level,
        },
    })
}

/// Builds a corpus. Bad items land in the manifest's skip list; the first
/// occurrence of duplicated content is kept.
pub fn build_corpus(inputs: &[CorpusInput]) -> CorpusBuild {
    let results: Vec<Result<CorpusPair, String>> = inputs.par_iter().map(make_pair).collect();
    let mut skipped = Vec::new();
    let mut pairs = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => pairs.push(p),
            Err(reason) => skipped.push(SkippedItem {
                index,
                origin: inputs[index].asm.origin_path.clone(),
                reason,
            }),
        }
    }
    let before = pairs.len();
    let corpus = Corpus::from_pairs(pairs);
    let mut tag_counts: BTreeMap<FunctionTag, usize> =
        FunctionTag::ALL.into_iter().map(|t| (t, 0)).collect();
    for p in corpus.pairs() {
        for t in &p.tags {
            *tag_counts.get_mut(t).unwrap() += 1;
        }
    }
    let manifest = CorpusManifest {
        total_pairs: corpus.len(),
        duplicates_dropped: before - corpus.len(),
        untagged: corpus.pairs().iter().filter(|p| p.tags.is_empty()).count(),
        tag_counts,
        skipped,
    };
    CorpusBuild { corpus, manifest }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointReport {
    pub shared: BTreeSet<String>,
}

impl DisjointReport {
    pub fn passed(&self) -> bool {
        self.shared.is_empty()
    }
}

pub fn check_disjoint(corpus_ids: &BTreeSet<String>, eval_ids: &BTreeSet<String>) -> DisjointReport {
    DisjointReport {
        shared: corpus_ids.intersection(eval_ids).cloned().collect(),
    }
}

/// Reads ids from a corpus file, or from a plain list with one id per line.
pub fn read_id_set(path: &Path) -> Result<BTreeSet<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('{') {
            let rec: CorpusRecord =
                serde_json::from_str(line).map_err(|e| CorpusError::BadRecord {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            ids.insert(rec.id);
        } else {
            ids.insert(line.to_string());
        }
    }
    Ok(ids)
}
