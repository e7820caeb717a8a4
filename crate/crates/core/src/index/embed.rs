//! Embedding providers.
//!
//! The wire protocol for an external provider is JSON over HTTP:
//!
//! * `GET  {base}/health` answers `{"d": 1024, "model_id": "..."}`
//! * `POST {base}/embed` with `{"asm_text": "<normalized assembly>"}` answers
//!   `{"vector": [f32; d], "d": d, "model_id": "..."}`
//!
//! The built-in [`HashingEmbedder`] needs no model: it hashes opcode n-grams
//! (n = 1..3) into `d` buckets and L2-normalizes the counts.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingVector, IndexError};
use crate::asmnorm::{self, NormalizedAsm};

pub const DEFAULT_DIM: usize = 1024;

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn model_id(&self) -> String;
    fn embed_text(&self, asm_body: &str) -> Result<EmbeddingVector, IndexError>;
}

/// Embeds a normalized function and checks the dimension.
pub fn embed(asm: &NormalizedAsm, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector, IndexError> {
    let v = provider.embed_text(&asm.body)?;
    if v.dim() != provider.dim() {
        return Err(IndexError::DimensionMismatch {
            expected: provider.dim(),
            got: v.dim(),
        });
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashingEmbedder { dim }
    }

    /// The n-gram feature strings of a body, in order. Bodies without any
    /// instruction line fall back to their raw tokens.
    pub fn features(asm_body: &str) -> Vec<String> {
        let ops = asmnorm::opcodes(asm_body);
        if ops.is_empty() {
            return asm_body
                .split_whitespace()
                .map(|t| format!("t:{t}"))
                .collect();
        }
        let mut feats = Vec::new();
        for n in 1..=3 {
            for w in ops.windows(n) {
                feats.push(format!("{n}:{}", w.join(" ")));
            }
        }
        feats
    }

    pub fn bucket(&self, feature: &str) -> usize {
        let digest = Sha256::digest(feature.as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&digest[..8]);
        (u64::from_le_bytes(b) % self.dim as u64) as usize
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIM)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        format!("ngram-hash-{}", self.dim)
    }

    fn embed_text(&self, asm_body: &str) -> Result<EmbeddingVector, IndexError> {
        let feats = Self::features(asm_body);
        if feats.is_empty() {
            return Err(IndexError::InvalidVector("empty assembly body".into()));
        }
        let mut counts = vec![0f64; self.dim];
        for f in &feats {
            counts[self.bucket(f)] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        EmbeddingVector::new(counts.into_iter().map(|c| (c / norm) as f32).collect())
    }
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    asm_text: &'a str,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vector: Vec<f32>,
    d: usize,
    #[serde(default)]
    #[allow(dead_code)]
    model_id: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HealthResponse {
    pub d: usize,
    pub model_id: String,
}

/// Client for an embedding service speaking the protocol above.
pub struct ServiceEmbedder {
    base: String,
    health: HealthResponse,
    client: reqwest::blocking::Client,
}

impl ServiceEmbedder {
    /// Connects and reads the advertised dimension from `/health`.
    pub fn connect(base_url: &str) -> Result<Self, IndexError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| IndexError::ProviderUnavailable(e.to_string()))?;
        let base = base_url.trim_end_matches('/').to_string();
        let health: HealthResponse = client
            .get(format!("{base}/health"))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| IndexError::ProviderUnavailable(e.to_string()))?;
        Ok(ServiceEmbedder {
            base,
            health,
            client,
        })
    }

    pub fn health(&self) -> &HealthResponse {
        &self.health
    }
}

impl EmbeddingProvider for ServiceEmbedder {
    fn dim(&self) -> usize {
        self.health.d
    }

    fn model_id(&self) -> String {
        self.health.model_id.clone()
    }

    fn embed_text(&self, asm_body: &str) -> Result<EmbeddingVector, IndexError> {
        let resp: EmbedResponse = self
            .client
            .post(format!("{}/embed", self.base))
            .json(&EmbedRequest { asm_text: asm_body })
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| IndexError::ProviderUnavailable(e.to_string()))?;
        if resp.d != self.health.d || resp.vector.len() != self.health.d {
            return Err(IndexError::DimensionMismatch {
                expected: self.health.d,
                got: resp.vector.len(),
            });
        }
        EmbeddingVector::new(resp.vector)
    }
}
