//! Request/response transcripts that a replay client plays back exactly.
//!
//! A transcript is JSON lines, one successful call per line:
//! `{"key": ..., "model_id": ..., "seed": ..., "prompt": ..., "response": ...}`
//! where `key` is the SHA-256 of `model_id`, the decimal seed and the prompt
//! joined by NUL bytes.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Generation, GenerationParams, LlmError, ModelClient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    pub model_id: String,
    pub seed: u64,
    pub prompt: String,
    pub response: String,
}

pub fn transcript_key(prompt: &str, params: &GenerationParams) -> String {
    let mut h = Sha256::new();
    h.update(params.model_id.as_bytes());
    h.update([0]);
    h.update(params.seed.to_string().as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

/// Forwards to an inner client and appends every success to a transcript.
pub struct RecordingClient<C> {
    inner: C,
    out: Mutex<File>,
}

impl<C: ModelClient> RecordingClient<C> {
    pub fn new(inner: C, path: &Path) -> std::io::Result<Self> {
        let out = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingClient {
            inner,
            out: Mutex::new(out),
        })
    }
}

impl<C: ModelClient> ModelClient for RecordingClient<C> {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, LlmError> {
        let g = self.inner.generate(prompt, params)?;
        let entry = TranscriptEntry {
            key: transcript_key(prompt, params),
            model_id: params.model_id.clone(),
            seed: params.seed,
            prompt: prompt.to_string(),
            response: g.text.clone(),
        };
        let line = serde_json::to_string(&entry).expect("transcript entry serializes");
        let mut out = self.out.lock().expect("transcript lock");
        writeln!(out, "{line}").map_err(|e| LlmError::provider(format!("transcript write: {e}")))?;
        Ok(g)
    }
}

/// Answers only from a transcript. The first entry for a key wins.
pub struct ReplayClient {
    responses: HashMap<String, String>,
}

impl ReplayClient {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let mut responses = HashMap::new();
        for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TranscriptEntry = serde_json::from_str(&line).map_err(|err| {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("transcript line {}: {err}", n + 1),
                )
            })?;
            responses.entry(e.key).or_insert(e.response);
        }
        Ok(ReplayClient { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ModelClient for ReplayClient {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, LlmError> {
        self.responses
            .get(&transcript_key(prompt, params))
            .map(|r| Generation::from(r.clone()))
            .ok_or_else(|| LlmError::provider("prompt not present in replay transcript"))
    }
}
