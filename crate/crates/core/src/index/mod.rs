//! Exact vector index with CSLS scoring and category-aware re-ranking.
//!
//! Cosine similarity is `dot(a, b) / (|a| * |b|)`, accumulated in `f64` in
//! coordinate order. The neighborhood term `r(v)` of a vector is the mean of
//! its `N` largest cosines to index entries, summed in descending order. An
//! entry's own neighborhood excludes itself and is precomputed at build time;
//! a query's neighborhood is computed over the whole index, minus the entry
//! carrying the query's own id when the query comes from the index.
//! When fewer than `N` neighbors exist the mean runs over those available.
//!
//! `csls(q, c) = 2 cos(q, c) - r(q) - r(c)`. A candidate whose tag set does
//! not intersect the target's (and neither set is empty) has its score
//! multiplied by `alpha`. Ties in the adjusted score go to the smaller id.

pub mod embed;

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{tags_from_mask, tags_to_mask, Corpus, TagSet};
pub use embed::{EmbeddingProvider, HashingEmbedder, ServiceEmbedder};

pub const INDEX_MAGIC: &[u8; 4] = b"CDIX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index is empty")]
    EmptyIndex,
    #[error("index holds {have} candidates, {need} requested")]
    IndexTooSmall { need: usize, have: usize },
    #[error("cannot build an index from an empty corpus")]
    BuildRejected,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid embedding: {0}")]
    InvalidVector(String),
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("unknown candidate id {0}")]
    UnknownCandidate(String),
    #[error("i/o error on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported index file version {found} (expected {INDEX_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("malformed index file: {0}")]
    BadFormat(String),
}

/// A finite, not-all-zero embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, IndexError> {
        if values.is_empty() {
            return Err(IndexError::InvalidVector("zero-length vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(IndexError::InvalidVector(format!("non-finite value at {i}")));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(IndexError::InvalidVector("all-zero vector".into()));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// The same direction scaled to unit length.
    pub fn normalized(&self) -> EmbeddingVector {
        let n = self.norm();
        EmbeddingVector(self.0.iter().map(|v| (*v as f64 / n) as f32).collect())
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0f64;
    for (x, y) in a.iter().zip(b) {
        s += *x as f64 * *y as f64;
    }
    s
}

fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

fn mean_of_top(mut sims: Vec<f64>, n: usize) -> f64 {
    if sims.is_empty() || n == 0 {
        return 0.0;
    }
    sims.sort_by(|a, b| b.total_cmp(a));
    let take = n.min(sims.len());
    let mut s = 0f64;
    for v in &sims[..take] {
        s += *v;
    }
    s / take as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub pair_id: String,
    pub vector: EmbeddingVector,
    pub tags: TagSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k: usize,
    pub alpha: f64,
    pub csls_neighborhood: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            k: 5,
            alpha: 0.9,
            csls_neighborhood: 10,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(IndexError::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.csls_neighborhood == 0 {
            return Err(IndexError::InvalidConfig("csls_neighborhood must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    Similar,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub pair_id: String,
    /// `None` in random mode.
    pub raw_csls: Option<f64>,
    pub adjusted: Option<f64>,
    pub category_match: bool,
}

/// Tag sets match when they intersect or either is empty.
pub fn tags_match(a: &TagSet, b: &TagSet) -> bool {
    a.is_empty() || b.is_empty() || !a.is_disjoint(b)
}

pub fn apply_penalty(raw: f64, category_match: bool, alpha: f64) -> f64 {
    if category_match {
        raw
    } else {
        alpha * raw
    }
}

/// A retrieval target.
#[derive(Debug, Clone)]
pub struct Query<'a> {
    pub vector: &'a EmbeddingVector,
    pub tags: &'a TagSet,
    /// Id of the index entry the query was taken from, if any. That entry
    /// is left out of the query's neighborhood and of the candidates.
    pub self_id: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    dim: usize,
    neighborhood: usize,
    provider_id: String,
    entries: Vec<IndexEntry>,
    norms: Vec<f64>,
    /// Precomputed `r(entry)` over the index without the entry itself.
    radius: Vec<f64>,
}

impl Index {
    /// Builds from entries (sorted by id; later duplicates of an id dropped).
    pub fn from_entries(
        mut entries: Vec<IndexEntry>,
        neighborhood: usize,
        provider_id: impl Into<String>,
    ) -> Result<Self, IndexError> {
        if entries.is_empty() {
            return Err(IndexError::BuildRejected);
        }
        if neighborhood == 0 {
            return Err(IndexError::InvalidConfig("csls_neighborhood must be >= 1".into()));
        }
        let dim = entries[0].vector.dim();
        if let Some(bad) = entries.iter().find(|e| e.vector.dim() != dim) {
            return Err(IndexError::DimensionMismatch {
                expected: dim,
                got: bad.vector.dim(),
            });
        }
        entries.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        entries.dedup_by(|b, a| a.pair_id == b.pair_id);
        let norms: Vec<f64> = entries.iter().map(|e| e.vector.norm()).collect();
        let radius = (0..entries.len())
            .into_par_iter()
            .map(|i| {
                let v = entries[i].vector.values();
                let sims: Vec<f64> = entries
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(j, e)| dot(v, e.vector.values()) / (norms[i] * norms[j]))
                    .collect();
                mean_of_top(sims, neighborhood)
            })
            .collect();
        Ok(Index {
            dim,
            neighborhood,
            provider_id: provider_id.into(),
            entries,
            norms,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn neighborhood(&self) -> usize {
        self.neighborhood
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn position(&self, pair_id: &str) -> Option<usize> {
        self.entries
            .binary_search_by(|e| e.pair_id.as_str().cmp(pair_id))
            .ok()
    }

    /// `r(entry)` as stored.
    pub fn radius_of(&self, pair_id: &str) -> Option<f64> {
        self.position(pair_id).map(|i| self.radius[i])
    }

    fn check_query(&self, q: &EmbeddingVector) -> Result<(), IndexError> {
        if q.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                got: q.dim(),
            });
        }
        Ok(())
    }

    fn query_cosines(&self, q: &EmbeddingVector) -> Vec<f64> {
        let qn = q.norm();
        self.entries
            .iter()
            .zip(&self.norms)
            .map(|(e, n)| dot(q.values(), e.vector.values()) / (qn * n))
            .collect()
    }

    fn query_radius(&self, cosines: &[f64], skip: Option<usize>) -> f64 {
        let sims: Vec<f64> = cosines
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, c)| *c)
            .collect();
        mean_of_top(sims, self.neighborhood)
    }

    /// CSLS between a query and one indexed candidate.
    pub fn csls(&self, query: &Query<'_>, candidate_id: &str) -> Result<f64, IndexError> {
        if self.entries.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        self.check_query(query.vector)?;
        let c = self
            .position(candidate_id)
            .ok_or_else(|| IndexError::UnknownCandidate(candidate_id.to_string()))?;
        let cosines = self.query_cosines(query.vector);
        let skip = query.self_id.and_then(|id| self.position(id));
        let rq = self.query_radius(&cosines, skip);
        Ok(2.0 * cosines[c] - rq - self.radius[c])
    }

    /// Top-k exemplars for a query. In random mode the selection is a
    /// uniform sample without replacement drawn from a generator seeded
    /// with `seed`; scores are not computed.
    pub fn retrieve_topk(
        &self,
        query: &Query<'_>,
        cfg: &RetrievalConfig,
        mode: RetrievalMode,
        seed: u64,
    ) -> Result<Vec<ScoredCandidate>, IndexError> {
        cfg.validate()?;
        if cfg.k == 0 {
            return Ok(Vec::new());
        }
        if self.entries.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        self.check_query(query.vector)?;
        if cfg.csls_neighborhood != self.neighborhood {
            return Err(IndexError::InvalidConfig(format!(
                "index was built with csls_neighborhood {}, config asks for {}",
                self.neighborhood, cfg.csls_neighborhood
            )));
        }
        let skip = query.self_id.and_then(|id| self.position(id));
        let candidates: Vec<usize> = (0..self.entries.len()).filter(|i| Some(*i) != skip).collect();
        if candidates.len() < cfg.k {
            return Err(IndexError::IndexTooSmall {
                need: cfg.k,
                have: candidates.len(),
            });
        }
        match mode {
            RetrievalMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let picks = rand::seq::index::sample(&mut rng, candidates.len(), cfg.k);
                Ok(picks
                    .into_iter()
                    .map(|p| {
                        let e = &self.entries[candidates[p]];
                        ScoredCandidate {
                            pair_id: e.pair_id.clone(),
                            raw_csls: None,
                            adjusted: None,
                            category_match: tags_match(query.tags, &e.tags),
                        }
                    })
                    .collect())
            }
            RetrievalMode::Similar => {
                let cosines = self.query_cosines(query.vector);
                let rq = self.query_radius(&cosines, skip);
                let mut scored: Vec<ScoredCandidate> = candidates
                    .into_iter()
                    .map(|i| {
                        let e = &self.entries[i];
                        let raw = 2.0 * cosines[i] - rq - self.radius[i];
                        let category_match = tags_match(query.tags, &e.tags);
                        ScoredCandidate {
                            pair_id: e.pair_id.clone(),
                            raw_csls: Some(raw),
                            adjusted: Some(apply_penalty(raw, category_match, cfg.alpha)),
                            category_match,
                        }
                    })
                    .collect();
                scored.sort_by(|a, b| {
                    let (x, y) = (a.adjusted.unwrap(), b.adjusted.unwrap());
                    y.total_cmp(&x).then_with(|| a.pair_id.cmp(&b.pair_id))
                });
                scored.truncate(cfg.k);
                Ok(scored)
            }
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_u32::<LittleEndian>(INDEX_VERSION)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u32::<LittleEndian>(self.neighborhood as u32)?;
        w.write_u64::<LittleEndian>(self.entries.len() as u64)?;
        w.write_u32::<LittleEndian>(self.provider_id.len() as u32)?;
        w.write_all(self.provider_id.as_bytes())?;
        for (e, r) in self.entries.iter().zip(&self.radius) {
            w.write_u16::<LittleEndian>(e.pair_id.len() as u16)?;
            w.write_all(e.pair_id.as_bytes())?;
            w.write_u8(tags_to_mask(&e.tags))?;
            for v in e.vector.values() {
                w.write_f32::<LittleEndian>(*v)?;
            }
            w.write_f64::<LittleEndian>(*r)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, IndexError> {
        let bad = |e: std::io::Error| IndexError::BadFormat(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(bad)?;
        if &magic != INDEX_MAGIC {
            return Err(IndexError::BadFormat("not an index file".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(bad)?;
        if version != INDEX_VERSION {
            return Err(IndexError::VersionMismatch { found: version });
        }
        let dim = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        let neighborhood = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        let count = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
        let plen = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        let mut pbuf = vec![0u8; plen];
        r.read_exact(&mut pbuf).map_err(bad)?;
        let provider_id = String::from_utf8(pbuf).map_err(|e| IndexError::BadFormat(e.to_string()))?;
        let mut entries = Vec::with_capacity(count);
        let mut radius = Vec::with_capacity(count);
        for _ in 0..count {
            let ilen = r.read_u16::<LittleEndian>().map_err(bad)? as usize;
            let mut ibuf = vec![0u8; ilen];
            r.read_exact(&mut ibuf).map_err(bad)?;
            let pair_id = String::from_utf8(ibuf).map_err(|e| IndexError::BadFormat(e.to_string()))?;
            let tags = tags_from_mask(r.read_u8().map_err(bad)?);
            let mut values = vec![0f32; dim];
            r.read_f32_into::<LittleEndian>(&mut values).map_err(bad)?;
            radius.push(r.read_f64::<LittleEndian>().map_err(bad)?);
            entries.push(IndexEntry {
                pair_id,
                vector: EmbeddingVector::new(values)?,
                tags,
            });
        }
        if entries.windows(2).any(|w| w[0].pair_id >= w[1].pair_id) {
            return Err(IndexError::BadFormat("entries not sorted by id".into()));
        }
        let norms = entries.iter().map(|e| e.vector.norm()).collect();
        Ok(Index {
            dim,
            neighborhood,
            provider_id,
            entries,
            norms,
            radius,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let io = |e| IndexError::IoFailure {
            path: path.display().to_string(),
            source: e,
        };
        let f = fs::File::create(path).map_err(io)?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let f = fs::File::open(path).map_err(|e| IndexError::IoFailure {
            path: path.display().to_string(),
            source: e,
        })?;
        Index::read_from(&mut BufReader::new(f))
    }
}

/// Embeds every corpus pair and builds the index.
pub fn build_index(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    neighborhood: usize,
) -> Result<Index, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::BuildRejected);
    }
    let entries = corpus
        .pairs()
        .par_iter()
        .map(|p| {
            Ok(IndexEntry {
                pair_id: p.id.clone(),
                vector: embed::embed(&p.asm, provider)?,
                tags: p.tags.clone(),
            })
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    Index::from_entries(entries, neighborhood, provider.model_id())
}
