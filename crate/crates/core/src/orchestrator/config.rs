//! Run configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DecompJob, OrchestratorError, Resources};
use crate::context::{self, RuleRegistry, DEFAULT_TOKEN_CAP};
use crate::corpus::Corpus;
use crate::harness::HarnessConfig;
use crate::index::{Index, RetrievalConfig};
use crate::llm::http::{ChatClient, ChatClientConfig};
use crate::llm::transcript::{RecordingClient, ReplayClient};
use crate::llm::{GenerationParams, ModelClient, RetryPolicy};
use crate::triage::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Target only.
    #[serde(rename = "baseline")]
    Baseline,
    /// Retrieved similar exemplars.
    #[serde(rename = "icl4d_r", alias = "icl4d-r")]
    Icl4dR,
    /// Optimization-flag rule.
    #[serde(rename = "icl4d_o", alias = "icl4d-o")]
    Icl4dO,
    /// Random exemplars, count and length matched to `Icl4dR`.
    #[serde(rename = "random_retrieval", alias = "random")]
    RandomRetrieval,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::Icl4dR, Mode::Icl4dO, Mode::RandomRetrieval];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Icl4dR => "icl4d_r",
            Mode::Icl4dO => "icl4d_o",
            Mode::RandomRetrieval => "random_retrieval",
        }
    }

    pub fn needs_retrieval(self) -> bool {
        matches!(self, Mode::Icl4dR | Mode::RandomRetrieval)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "icl4d_r" | "icl4d-r" => Ok(Mode::Icl4dR),
            "icl4d_o" | "icl4d-o" => Ok(Mode::Icl4dO),
            "random_retrieval" | "random" => Ok(Mode::RandomRetrieval),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    /// OpenAI-compatible chat endpoint.
    #[default]
    Http,
    /// Answers from a recorded transcript.
    Replay,
    /// Echoes each bundle's ground truth.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub kind: ClientKind,
    /// Replay source, or where to record when `kind = "http"`.
    pub transcript: Option<PathBuf>,
    pub http: ChatClientConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub service_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub bundles: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub worker_count: usize,
    /// Restricts bundles to these levels when non-empty.
    pub opt_levels: Vec<String>,
    pub rule_flag: Option<String>,
    pub token_cap: usize,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationParams,
    pub retry: RetryPolicy,
    pub harness: HarnessConfig,
    pub client: ClientConfig,
    pub embedding: EmbeddingConfig,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Icl4dR,
            seed: 42,
            worker_count: 1,
            opt_levels: Vec::new(),
            rule_flag: None,
            token_cap: DEFAULT_TOKEN_CAP,
            retrieval: RetrievalConfig::default(),
            generation: GenerationParams::default(),
            retry: RetryPolicy::default(),
            harness: HarnessConfig::default(),
            client: ClientConfig::default(),
            embedding: EmbeddingConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> OrchestratorError {
    OrchestratorError::Config(msg.into())
}

fn require<'p>(p: &'p Option<PathBuf>, what: &str) -> Result<&'p Path, OrchestratorError> {
    let p = p.as_deref().ok_or_else(|| config_err(format!("paths.{what} is not set")))?;
    if !p.exists() {
        return Err(OrchestratorError::MissingResource(format!("{what}: {}", p.display())));
    }
    Ok(p)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, OrchestratorError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| super::io_err(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks values that do not depend on files.
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.worker_count == 0 {
            return Err(config_err("worker_count must be >= 1"));
        }
        if self.token_cap == 0 {
            return Err(config_err("token_cap must be >= 1"));
        }
        self.retrieval.validate()?;
        self.generation.validate()?;
        if self.mode == Mode::Icl4dO && self.rule_flag.is_none() {
            return Err(config_err("mode icl4d_o needs rule_flag"));
        }
        Ok(())
    }

    /// Checks that every file the mode reads is present.
    pub fn validate_paths(&self) -> Result<(), OrchestratorError> {
        require(&self.paths.bundles, "bundles")?;
        if self.mode.needs_retrieval() {
            require(&self.paths.corpus, "corpus")?;
            require(&self.paths.index, "index")?;
        }
        if self.paths.rules.is_some() {
            require(&self.paths.rules, "rules")?;
        }
        if self.paths.patterns.is_some() {
            require(&self.paths.patterns, "patterns")?;
        }
        if self.client.kind == ClientKind::Replay {
            require(&self.client.transcript, "client.transcript")?;
        }
        Ok(())
    }

    /// Loads rules, patterns and, for retrieval modes, corpus and index.
    pub fn load_resources(&self) -> Result<Resources, OrchestratorError> {
        self.validate_paths()?;
        let rules = match &self.paths.rules {
            Some(p) => context::load_rules(p)?,
            None => RuleRegistry::builtin(),
        };
        let classifier = match &self.paths.patterns {
            Some(p) => Classifier::load(p)?,
            None => Classifier::default(),
        };
        let res = Resources::new(rules, classifier);
        if !self.mode.needs_retrieval() {
            return Ok(res);
        }
        let corpus = Corpus::load(require(&self.paths.corpus, "corpus")?)?;
        let index = Index::load(require(&self.paths.index, "index")?)?;
        res.with_retrieval(corpus, index, self.embedding.service_url.as_deref())
    }

    /// The model client selected by `client.kind`.
    pub fn build_client(&self, jobs: &[DecompJob]) -> Result<Box<dyn ModelClient>, OrchestratorError> {
        match self.client.kind {
            ClientKind::Oracle => Ok(Box::new(super::oracle_client(jobs, str::to_string))),
            ClientKind::Replay => {
                let p = require(&self.client.transcript, "client.transcript")?;
                Ok(Box::new(ReplayClient::load(p).map_err(|e| super::io_err(p, e))?))
            }
            ClientKind::Http => {
                let http = ChatClient::new(&self.client.http)?;
                match &self.client.transcript {
                    Some(p) => Ok(Box::new(RecordingClient::new(http, p).map_err(|e| super::io_err(p, e))?)),
                    None => Ok(Box::new(http)),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert_eq!("random".parse::<Mode>().unwrap(), Mode::RandomRetrieval);
        assert_eq!("icl4d-o".parse::<Mode>().unwrap(), Mode::Icl4dO);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = RunConfig::from_toml("mode = \"icl4d-o\"\nrule_flag = \"-ftree-coalesce-vars\"\n[retrieval]\nk = 3\n").unwrap();
        assert_eq!(cfg.mode, Mode::Icl4dO);
        assert_eq!(cfg.retrieval.k, 3);
        assert_eq!(cfg.retrieval.csls_neighborhood, 10);
        assert_eq!(cfg.seed, 42);
        cfg.validate().unwrap();
    }

    #[test]
    fn rule_mode_without_flag_is_rejected() {
        let cfg = RunConfig::from_toml("mode = \"icl4d_o\"").unwrap();
        assert!(matches!(cfg.validate(), Err(OrchestratorError::Config(_))));
    }

    #[test]
    fn missing_bundles_path_is_reported() {
        let cfg = RunConfig {
            paths: PathsConfig {
                bundles: Some("/nonexistent/bundles".into()),
                ..Default::default()
            },
            mode: Mode::Baseline,
            ..Default::default()
        };
        assert!(matches!(cfg.validate_paths(), Err(OrchestratorError::MissingResource(_))));
    }
}
