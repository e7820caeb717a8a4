//! Batch decompilation: prompt construction per mode, generation,
//! evaluation and classification, with deterministic result records.
//!
//! Result records are written as JSON lines in completion order and carry no
//! timings, so two runs differing only in worker count produce the same set
//! of lines. Timings go to a `<output>.timings.jsonl` sidecar. Records
//! already present in the output file for the same mode are reused, which
//! lets an interrupted run resume.

pub mod config;
pub mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asmnorm::{self, NormalizedAsm, RawAssemblyUnit, SliceMeta, CANONICAL_NAME};
use crate::context::{
    build_bare_prompt, build_retrieval_prompt, build_rule_prompt, fit_retrieval_prompt, ContextError, Exemplar,
    Prompt, PromptMode, RuleRegistry,
};
use crate::corpus::{self, Corpus, StructuralMetrics, TagSet};
use crate::harness::{self, BreakdownKey, EsrReport, ExecStatus, HarnessBundle, TestHarness};
use crate::index::embed::{EmbeddingProvider, HashingEmbedder, ServiceEmbedder};
use crate::index::{Index, Query, RetrievalConfig, RetrievalMode};
use crate::llm::{self, mock::MockClient, ModelClient, Usage};
use crate::triage::{self, Classifier, ErrorCategory};

pub use config::{ClientKind, Mode, RunConfig};

/// Random draws tried when matching the similar-mode context length.
pub const MAX_LENGTH_MATCH_DRAWS: u64 = 2000;
/// Allowed relative deviation of the random exemplars' total length.
pub const LENGTH_TOLERANCE: f64 = 0.10;
const STDERR_KEEP: usize = 4000;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing resource: {0}")]
    MissingResource(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Index(#[from] crate::index::IndexError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Triage(#[from] triage::TriageError),
    #[error(transparent)]
    Llm(#[from] llm::LlmError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> OrchestratorError {
    OrchestratorError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// One function to decompile.
#[derive(Debug, Clone)]
pub struct DecompJob {
    pub sample_id: String,
    pub dataset: String,
    pub opt_level: String,
    pub target: NormalizedAsm,
    pub tags: TagSet,
    pub harness: TestHarness,
    pub ground_truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub sample_id: String,
    pub reason: String,
}

/// Turns bundles into jobs. Bundles without a usable target listing are
/// skipped and reported.
pub fn prepare_jobs(bundles: &[HarnessBundle]) -> (Vec<DecompJob>, Vec<SkippedSample>) {
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for b in bundles {
        match job_from_bundle(b) {
            Ok(j) => jobs.push(j),
            Err(reason) => skipped.push(SkippedSample {
                sample_id: b.meta.sample_id.clone(),
                reason,
            }),
        }
    }
    (jobs, skipped)
}

fn job_from_bundle(b: &HarnessBundle) -> Result<DecompJob, String> {
    let listing = b.target_listing.as_deref().ok_or("bundle has no target.s")?;
    let opt_level = b.meta.opt_level.parse().map_err(|e| format!("opt level: {e}"))?;
    let meta = SliceMeta {
        origin_path: b.dir.join("target.s").display().to_string(),
        compiler_id: b.meta.compiler.clone(),
        opt_level: Some(opt_level),
    };
    let mut report = asmnorm::slice_functions(listing, &[CANONICAL_NAME], &meta);
    let unit = match report.units.pop() {
        Some(u) => u,
        None => RawAssemblyUnit {
            origin_path: meta.origin_path.clone(),
            compiler_id: meta.compiler_id.clone(),
            opt_level,
            text: listing.to_string(),
        },
    };
    let target = asmnorm::normalize_asm(&unit).map_err(|e| format!("target assembly: {e}"))?;
    Ok(DecompJob {
        sample_id: b.meta.sample_id.clone(),
        dataset: b.meta.dataset.clone(),
        opt_level: b.meta.opt_level.clone(),
        tags: corpus::tag_asm(&target),
        target,
        harness: b.harness.clone(),
        ground_truth: b.ground_truth.clone(),
    })
}

/// Everything a batch reads but never modifies.
pub struct Resources {
    pub corpus: Option<Corpus>,
    pub index: Option<Index>,
    pub embedder: Option<Box<dyn EmbeddingProvider>>,
    pub rules: RuleRegistry,
    pub classifier: Classifier,
}

impl Resources {
    pub fn new(rules: RuleRegistry, classifier: Classifier) -> Self {
        Resources {
            corpus: None,
            index: None,
            embedder: None,
            rules,
            classifier,
        }
    }

    /// Adds a corpus and index, with the query embedder that matches the
    /// index's provider.
    pub fn with_retrieval(
        mut self,
        corpus: Corpus,
        index: Index,
        service_url: Option<&str>,
    ) -> Result<Self, OrchestratorError> {
        let embedder = embedder_for(&index, service_url)?;
        self.corpus = Some(corpus);
        self.index = Some(index);
        self.embedder = Some(embedder);
        Ok(self)
    }
}

/// The built-in embedder if the index was built with it, else the service.
pub fn embedder_for(index: &Index, service_url: Option<&str>) -> Result<Box<dyn EmbeddingProvider>, OrchestratorError> {
    let fallback = HashingEmbedder::new(index.dim());
    if fallback.model_id() == index.provider_id() {
        return Ok(Box::new(fallback));
    }
    let url = service_url.ok_or_else(|| {
        OrchestratorError::Config(format!(
            "index was built by provider {:?}; set embedding.service_url",
            index.provider_id()
        ))
    })?;
    let svc = ServiceEmbedder::connect(url)?;
    if svc.model_id() != index.provider_id() || svc.dim() != index.dim() {
        return Err(OrchestratorError::Config(format!(
            "embedding service serves {} (d={}), index needs {} (d={})",
            svc.model_id(),
            svc.dim(),
            index.provider_id(),
            index.dim()
        )));
    }
    Ok(Box::new(svc))
}

/// Per-sample generator seed derived from the run seed.
pub fn sample_seed(seed: u64, sample_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(sample_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn exemplars_for(
    corpus: &Corpus,
    picks: &[crate::index::ScoredCandidate],
) -> Result<Vec<Exemplar>, OrchestratorError> {
    picks
        .iter()
        .map(|c| {
            let p = corpus
                .get(&c.pair_id)
                .ok_or_else(|| OrchestratorError::MissingResource(format!("pair {} not in corpus", c.pair_id)))?;
            Ok(Exemplar {
                id: p.id.clone(),
                asm_text: p.asm.body.clone(),
                src_text: p.src.body.clone(),
                adjusted_score: c.adjusted,
            })
        })
        .collect()
}

/// Characters the exemplars contribute to a prompt.
pub fn exemplar_chars(exemplars: &[Exemplar]) -> usize {
    exemplars
        .iter()
        .map(|e| e.asm_text.trim_end_matches('\n').len() + e.src_text.trim_end_matches('\n').len())
        .sum()
}

pub fn within_tolerance(got: usize, want: usize) -> bool {
    (got as f64 - want as f64).abs() <= LENGTH_TOLERANCE * want as f64
}

/// Builds the prompt for one job under `mode`.
pub fn build_prompt(
    job: &DecompJob,
    mode: Mode,
    cfg: &RunConfig,
    res: &Resources,
) -> Result<Prompt, OrchestratorError> {
    let target = &job.target.body;
    match mode {
        Mode::Baseline => Ok(build_bare_prompt(target, cfg.token_cap)?),
        Mode::Icl4dO => {
            let flag = cfg
                .rule_flag
                .as_deref()
                .ok_or_else(|| OrchestratorError::Config("icl4d_o needs rule_flag".into()))?;
            let rule = res
                .rules
                .get(flag)
                .ok_or_else(|| OrchestratorError::Context(ContextError::UnknownFlag(flag.into())))?;
            Ok(build_rule_prompt(target, rule, cfg.token_cap)?)
        }
        Mode::Icl4dR | Mode::RandomRetrieval => {
            let similar = similar_prompt(job, cfg, res)?;
            if mode == Mode::Icl4dR {
                return Ok(similar.0);
            }
            random_prompt(job, cfg, res, &similar.1)
        }
    }
}

fn retrieval_parts(res: &Resources) -> Result<(&Corpus, &Index, &dyn EmbeddingProvider), OrchestratorError> {
    match (&res.corpus, &res.index, &res.embedder) {
        (Some(c), Some(i), Some(e)) => Ok((c, i, e.as_ref())),
        _ => Err(OrchestratorError::MissingResource("retrieval modes need corpus, index and embedder".into())),
    }
}

fn similar_prompt(job: &DecompJob, cfg: &RunConfig, res: &Resources) -> Result<(Prompt, Vec<Exemplar>), OrchestratorError> {
    let (corpus, index, embedder) = retrieval_parts(res)?;
    let vector = crate::index::embed::embed(&job.target, embedder)?;
    let query = Query {
        vector: &vector,
        tags: &job.tags,
        self_id: None,
    };
    let picks = index.retrieve_topk(&query, &cfg.retrieval, RetrievalMode::Similar, cfg.seed)?;
    let exemplars = exemplars_for(corpus, &picks)?;
    let prompt = fit_retrieval_prompt(&job.target.body, &exemplars, cfg.token_cap)?;
    let kept = exemplars[..prompt.exemplar_ids.len()].to_vec();
    Ok((prompt, kept))
}

/// Random exemplars with the same count as the similar-mode selection and a
/// total length within the tolerance of it. Draws are re-seeded until one
/// fits; if none does within the draw limit, the closest draw is used.
fn random_prompt(
    job: &DecompJob,
    cfg: &RunConfig,
    res: &Resources,
    similar: &[Exemplar],
) -> Result<Prompt, OrchestratorError> {
    let (corpus, index, embedder) = retrieval_parts(res)?;
    let k = similar.len();
    if k == 0 {
        return Ok(build_bare_prompt(&job.target.body, cfg.token_cap)?);
    }
    let want = exemplar_chars(similar);
    let vector = crate::index::embed::embed(&job.target, embedder)?;
    let query = Query {
        vector: &vector,
        tags: &job.tags,
        self_id: None,
    };
    let rcfg = RetrievalConfig { k, ..cfg.retrieval };
    let base = sample_seed(cfg.seed, &job.sample_id);
    let mut best: Option<(usize, Vec<Exemplar>)> = None;
    for draw in 0..MAX_LENGTH_MATCH_DRAWS {
        let picks = index.retrieve_topk(&query, &rcfg, RetrievalMode::Random, base.wrapping_add(draw))?;
        let exemplars = exemplars_for(corpus, &picks)?;
        let got = exemplar_chars(&exemplars);
        let fits = build_retrieval_prompt(&job.target.body, &exemplars, k, cfg.token_cap).is_ok();
        if fits && within_tolerance(got, want) {
            return Ok(build_retrieval_prompt(&job.target.body, &exemplars, k, cfg.token_cap)?);
        }
        let gap = got.abs_diff(want);
        if fits && best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, exemplars));
        }
    }
    match best {
        Some((_, exemplars)) => {
            log::warn!("{}: no random draw within length tolerance, using closest", job.sample_id);
            Ok(build_retrieval_prompt(&job.target.body, &exemplars, k, cfg.token_cap)?)
        }
        None => Err(OrchestratorError::Config(format!(
            "{}: no random selection of {k} exemplars fits the token cap",
            job.sample_id
        ))),
    }
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompResult {
    pub sample_id: String,
    pub dataset: String,
    pub opt_level: String,
    pub mode: Mode,
    pub prompt_mode: Option<String>,
    pub exemplar_ids: Vec<String>,
    pub rule_flag: Option<String>,
    pub token_estimate: usize,
    pub prompt_sha256: Option<String>,
    pub response_text: Option<String>,
    pub extracted_source: Option<String>,
    pub retries: u32,
    pub usage: Option<Usage>,
    pub status: Option<ExecStatus>,
    pub category: Option<ErrorCategory>,
    pub matched_pattern: Option<String>,
    pub stderr: String,
    pub error: Option<String>,
}

impl DecompResult {
    pub fn passed(&self) -> bool {
        self.status == Some(ExecStatus::Pass)
    }

    /// Status for rate computations; anything that never ran is a failure.
    pub fn effective_status(&self) -> ExecStatus {
        self.status.unwrap_or(ExecStatus::CompileFail)
    }

    pub fn breakdown_key(&self) -> BreakdownKey {
        BreakdownKey {
            dataset: self.dataset.clone(),
            opt_level: self.opt_level.clone(),
            method: self.mode.as_str().to_string(),
        }
    }

    pub fn outcome_label(&self) -> triage::OutcomeLabel {
        match self.category {
            _ if self.passed() => triage::OutcomeLabel::Success,
            Some(c) => triage::OutcomeLabel::Failed(c),
            None => triage::OutcomeLabel::Failed(ErrorCategory::Other),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobTiming {
    pub sample_id: String,
    pub mode: Mode,
    pub latency_ms: u64,
    pub compile_ms: u64,
    pub run_ms: u64,
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        return s.to_string();
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}\n[truncated]", &s[..end])
}

fn prompt_mode_name(m: PromptMode) -> &'static str {
    match m {
        PromptMode::Retrieval => "retrieval",
        PromptMode::Rule => "rule",
        PromptMode::Bare => "bare",
    }
}

/// Runs one job to completion. Never fails: problems become the record's
/// `error` with category Other.
pub fn run_job(
    job: &DecompJob,
    mode: Mode,
    cfg: &RunConfig,
    res: &Resources,
    client: &dyn ModelClient,
) -> (DecompResult, JobTiming) {
    let mut rec = DecompResult {
        sample_id: job.sample_id.clone(),
        dataset: job.dataset.clone(),
        opt_level: job.opt_level.clone(),
        mode,
        prompt_mode: None,
        exemplar_ids: Vec::new(),
        rule_flag: None,
        token_estimate: 0,
        prompt_sha256: None,
        response_text: None,
        extracted_source: None,
        retries: 0,
        usage: None,
        status: None,
        category: None,
        matched_pattern: None,
        stderr: String::new(),
        error: None,
    };
    let mut timing = JobTiming {
        sample_id: job.sample_id.clone(),
        mode,
        latency_ms: 0,
        compile_ms: 0,
        run_ms: 0,
    };
    let fail = |rec: &mut DecompResult, pattern: &str, msg: String| {
        rec.category = Some(ErrorCategory::Other);
        rec.matched_pattern = Some(pattern.to_string());
        rec.error = Some(msg);
    };

    let prompt = match build_prompt(job, mode, cfg, res) {
        Ok(p) => p,
        Err(e) => {
            fail(&mut rec, "job.prompt", e.to_string());
            return (rec, timing);
        }
    };
    rec.prompt_mode = Some(prompt_mode_name(prompt.mode).into());
    rec.exemplar_ids = prompt.exemplar_ids.clone();
    rec.rule_flag = prompt.rule_flag.clone();
    rec.token_estimate = prompt.token_estimate;
    rec.prompt_sha256 = Some(hex::encode(Sha256::digest(prompt.text.as_bytes())));

    let response = match llm::complete(&prompt, &cfg.generation, client, &cfg.retry) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut rec, "job.model", e.to_string());
            return (rec, timing);
        }
    };
    timing.latency_ms = response.latency.as_millis() as u64;
    rec.retries = response.retries;
    rec.usage = Some(response.usage);
    rec.response_text = Some(response.raw_text);
    let Some(candidate) = response.extracted_source else {
        let f = triage::extraction_failure(&job.sample_id);
        rec.category = Some(f.category);
        rec.matched_pattern = Some(f.matched_pattern);
        return (rec, timing);
    };
    rec.extracted_source = Some(candidate.clone());

    match harness::evaluate_candidate(&candidate, &job.harness, &cfg.harness) {
        Ok(outcome) => {
            timing.compile_ms = outcome.compile_time.as_millis() as u64;
            timing.run_ms = outcome.run_time.as_millis() as u64;
            rec.status = Some(outcome.status);
            if let Some((cat, pat)) = res.classifier.classify(&outcome.stderr, outcome.status) {
                rec.category = Some(cat);
                rec.matched_pattern = Some(pat);
            }
            rec.stderr = truncate(&outcome.stderr, STDERR_KEEP);
        }
        Err(e) => fail(&mut rec, "job.harness", e.to_string()),
    }
    (rec, timing)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: Mode,
    /// Sorted by sample id.
    pub records: Vec<DecompResult>,
    pub esr: BTreeMap<BreakdownKey, EsrReport>,
    pub overall: Option<EsrReport>,
    pub resumed: usize,
}

/// Reads records of `mode` from an existing results file.
pub fn read_results(path: &Path) -> Result<Vec<DecompResult>, OrchestratorError> {
    let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        // A crash can leave a torn last line; it is simply redone.
        match serde_json::from_str::<DecompResult>(&line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("{}:{}: skipping unreadable record: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".timings.jsonl");
    PathBuf::from(s)
}

/// Serialized record line, shared by the writer and tests.
pub fn record_line(r: &DecompResult) -> String {
    serde_json::to_string(r).expect("record serializes")
}

fn summarize(mode: Mode, mut records: Vec<DecompResult>, resumed: usize) -> RunReport {
    records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let items: Vec<(BreakdownKey, ExecStatus)> = records.iter().map(|r| (r.breakdown_key(), r.effective_status())).collect();
    let statuses: Vec<ExecStatus> = items.iter().map(|(_, s)| *s).collect();
    RunReport {
        mode,
        esr: harness::esr_breakdown(&items),
        overall: harness::esr(&statuses).ok(),
        records,
        resumed,
    }
}

/// Runs `jobs` under `mode` on `cfg.worker_count` workers. With an output
/// path, records are appended as they finish and completed samples found in
/// the file are skipped.
pub fn run_batch(
    cfg: &RunConfig,
    mode: Mode,
    res: &Resources,
    client: &dyn ModelClient,
    jobs: &[DecompJob],
    output: Option<&Path>,
) -> Result<RunReport, OrchestratorError> {
    cfg.validate()?;
    let mut done: Vec<DecompResult> = Vec::new();
    if let Some(path) = output {
        if path.exists() {
            let wanted: BTreeSet<&str> = jobs.iter().map(|j| j.sample_id.as_str()).collect();
            let mut seen = BTreeSet::new();
            for r in read_results(path)? {
                if r.mode == mode && wanted.contains(r.sample_id.as_str()) && seen.insert(r.sample_id.clone()) {
                    done.push(r);
                }
            }
        }
    }
    let resumed = done.len();
    let finished: BTreeSet<String> = done.iter().map(|r| r.sample_id.clone()).collect();
    let todo: Vec<&DecompJob> = jobs.iter().filter(|j| !finished.contains(&j.sample_id)).collect();

    let open = |p: &Path| {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| io_err(p, e))
    };
    let writers = match output {
        Some(p) => Some((Mutex::new(open(p)?), Mutex::new(open(&sidecar(p))?), p)),
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| OrchestratorError::Config(e.to_string()))?;
    let fresh: Vec<Result<DecompResult, OrchestratorError>> = pool.install(|| {
        todo.par_iter()
            .map(|job| {
                let (rec, timing) = run_job(job, mode, cfg, res, client);
                if let Some((out, times, path)) = &writers {
                    let line = record_line(&rec);
                    writeln!(out.lock().expect("results lock"), "{line}").map_err(|e| io_err(path, e))?;
                    let t = serde_json::to_string(&timing).expect("timing serializes");
                    writeln!(times.lock().expect("timings lock"), "{t}").map_err(|e| io_err(path, e))?;
                }
                Ok(rec)
            })
            .collect()
    });
    for r in fresh {
        done.push(r?);
    }
    Ok(summarize(mode, done, resumed))
}

#[derive(Debug, Clone)]
pub struct SecondAttemptReport {
    pub rule_flag: String,
    /// First-round failures retried with the rule prompt.
    pub rule_run: RunReport,
    /// The same failures re-sent with their original prompt.
    pub refeed_run: RunReport,
}

impl SecondAttemptReport {
    pub fn rule_esr(&self) -> Option<f64> {
        self.rule_run.overall.as_ref().map(|r| r.esr)
    }

    pub fn refeed_esr(&self) -> Option<f64> {
        self.refeed_run.overall.as_ref().map(|r| r.esr)
    }
}

/// Retries the first run's non-passing O1-O3 samples with a rule prompt, and
/// re-feeds the same samples their original prompt as the control arm.
pub fn second_attempt_rules(
    first: &RunReport,
    jobs: &[DecompJob],
    rule_flag: &str,
    cfg: &RunConfig,
    res: &Resources,
    client: &dyn ModelClient,
) -> Result<SecondAttemptReport, OrchestratorError> {
    if res.rules.get(rule_flag).is_none() {
        return Err(ContextError::UnknownFlag(rule_flag.into()).into());
    }
    let failed: BTreeSet<&str> = first
        .records
        .iter()
        .filter(|r| !r.passed() && matches!(r.opt_level.as_str(), "O1" | "O2" | "O3"))
        .map(|r| r.sample_id.as_str())
        .collect();
    let retry: Vec<DecompJob> = jobs.iter().filter(|j| failed.contains(j.sample_id.as_str())).cloned().collect();
    let rule_cfg = RunConfig {
        rule_flag: Some(rule_flag.to_string()),
        ..cfg.clone()
    };
    Ok(SecondAttemptReport {
        rule_flag: rule_flag.to_string(),
        rule_run: run_batch(&rule_cfg, Mode::Icl4dO, res, client, &retry, None)?,
        refeed_run: run_batch(cfg, first.mode, res, client, &retry, None)?,
    })
}

/// Structural metrics of each job's ground truth.
pub fn job_metrics(jobs: &[DecompJob]) -> HashMap<String, StructuralMetrics> {
    jobs.iter()
        .filter_map(|j| {
            let src = asmnorm::canonicalize_source(j.ground_truth.as_deref()?).ok()?;
            Some((j.sample_id.clone(), corpus::compute_metrics(&src).ok()?))
        })
        .collect()
}

/// A client that answers every job's prompt with its ground truth in a
/// fenced block, optionally transformed. For validating bundles end to end.
pub fn oracle_client(jobs: &[DecompJob], transform: impl Fn(&str) -> String) -> MockClient {
    let map: HashMap<String, String> = jobs
        .iter()
        .filter_map(|j| {
            let gt = j.ground_truth.as_deref()?;
            Some((j.target.body.trim_end_matches('\n').to_string(), format!("```c\n{}```\n", transform(gt))))
        })
        .collect();
    MockClient::by_target(map)
}
