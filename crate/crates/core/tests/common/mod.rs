//! Fixture access and the checks shared by the topical suites and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use ctxdecomp::asmnorm::{self, NormalizedAsm, SliceMeta, CANONICAL_NAME};
use ctxdecomp::corpus::{self, Corpus, FunctionTag, TagSet};
use ctxdecomp::flags::{self, AsmCompiler, FlagCandidate, FlagsError, GccCompiler, Probe};
use ctxdecomp::harness::{self, load_bundles, ExecStatus, HarnessConfig, TestHarness};
use ctxdecomp::index::{self, EmbeddingVector, HashingEmbedder, Index, IndexEntry, Query, RetrievalConfig, RetrievalMode};
use ctxdecomp::orchestrator::{self, DecompJob, Mode, Resources, RunConfig};
use ctxdecomp::context::RuleRegistry;
use ctxdecomp::triage::{Classifier, ErrorCategory};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Set `CTXDECOMP_BLESS=1` to rewrite golden files from current output.
pub fn blessing() -> bool {
    std::env::var_os("CTXDECOMP_BLESS").is_some_and(|v| v == "1")
}

/// Compares `actual` with a golden file, or rewrites it when blessing.
pub fn golden(path: &Path, actual: &str) -> Result<(), String> {
    if blessing() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
        return Ok(());
    }
    let want = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if want == actual {
        Ok(())
    } else {
        let line = want
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        Err(format!("{} differs at {line}", path.display()))
    }
}

/// Outcome of one acceptance check.
#[derive(Debug)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Check {
            passed,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Check::new(false, detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs())
}

// ---------------------------------------------------------------- normalization

pub fn asm_fixture_paths() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixtures().join("asm"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "s"))
        .collect();
    v.sort();
    v
}

/// The func0 unit of a fixture listing.
pub fn fixture_unit(path: &Path) -> asmnorm::RawAssemblyUnit {
    let listing = std::fs::read_to_string(path).unwrap();
    let meta = SliceMeta {
        origin_path: path.display().to_string(),
        compiler_id: "gcc".into(),
        opt_level: None,
    };
    let mut r = asmnorm::slice_functions(&listing, &[CANONICAL_NAME], &meta);
    r.units.pop().unwrap_or_else(|| panic!("{}: no func0", path.display()))
}

struct Residue {
    comment: Regex,
    percent: Regex,
    hex: Regex,
    placeholder: Regex,
}

fn residue() -> &'static Residue {
    static R: OnceLock<Residue> = OnceLock::new();
    R.get_or_init(|| Residue {
        comment: Regex::new(r"#|;|/\*|\*/").unwrap(),
        percent: Regex::new("%").unwrap(),
        hex: Regex::new(r"0x[0-9a-fA-F]+").unwrap(),
        placeholder: Regex::new(r"\[INST-(\d+)\]").unwrap(),
    })
}

/// Text outside double-quoted literals.
fn unquoted(body: &str) -> String {
    let mut out = String::new();
    let mut in_str = false;
    let mut esc = false;
    for c in body.chars() {
        if in_str {
            if esc {
                esc = false;
            } else if c == '\\' {
                esc = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        } else {
            out.push(c);
        }
    }
    out
}

/// Invariants every normalized body must satisfy; returns a violation.
pub fn normalization_violation(n: &NormalizedAsm) -> Option<String> {
    let r = residue();
    let code = unquoted(&n.body);
    for (name, re) in [("comment", &r.comment), ("%", &r.percent), ("hex", &r.hex)] {
        if let Some(m) = re.find(&code) {
            return Some(format!("{name} residue {:?}", m.as_str()));
        }
    }
    if n.body.contains('%') {
        return Some("% inside a literal".into());
    }
    let in_body: BTreeSet<usize> = r
        .placeholder
        .captures_iter(&n.body)
        .map(|c| c[1].parse().unwrap())
        .collect();
    let in_map: Vec<usize> = n
        .placeholder_map
        .iter()
        .map(|(_, p)| {
            r.placeholder
                .captures(p)
                .map_or(0, |c| c[1].parse().unwrap())
        })
        .collect();
    let map_set: BTreeSet<usize> = in_map.iter().copied().collect();
    if map_set.len() != in_map.len() {
        return Some("duplicate placeholder in map".into());
    }
    if in_body != map_set {
        return Some(format!("placeholders in body {in_body:?} vs map {map_set:?}"));
    }
    if map_set != (1..=in_map.len()).collect() {
        return Some(format!("placeholder indices not 1..{}", in_map.len()));
    }
    let originals: BTreeSet<&str> = n.placeholder_map.iter().map(|(o, _)| o.as_str()).collect();
    if originals.len() != n.placeholder_map.len() {
        return Some("two labels share a placeholder".into());
    }
    None
}

pub fn golden_norm_path(asm: &Path) -> PathBuf {
    let name = asm.file_name().unwrap().to_string_lossy().replace(".s", ".norm");
    fixtures().join("golden/asm").join(name)
}

pub fn normalization_suite() -> Check {
    let start = Instant::now();
    let paths = asm_fixture_paths();
    let mut errors = Vec::new();
    let mut placeholders = 0;
    for p in &paths {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let n = match asmnorm::normalize_asm(&fixture_unit(p)) {
            Ok(n) => n,
            Err(e) => {
                errors.push(format!("{name}: {e}"));
                continue;
            }
        };
        placeholders += n.placeholder_map.len();
        if let Some(v) = normalization_violation(&n) {
            errors.push(format!("{name}: {v}"));
        }
        match asmnorm::normalize_asm_text(&n.body) {
            Ok(again) if again.body == n.body => {}
            Ok(_) => errors.push(format!("{name}: not idempotent")),
            Err(e) => errors.push(format!("{name}: renormalize: {e}")),
        }
        if let Err(e) = golden(&golden_norm_path(p), &format!("{}\n", n.body)) {
            errors.push(e);
        }
    }
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(10);
    if paths.len() != 100 {
        errors.push(format!("expected 100 fixture files, found {}", paths.len()));
    }
    if placeholders == 0 {
        errors.push("no fixture exercises address placeholders".into());
    }
    if elapsed > limit {
        errors.push(format!("too slow: {}", within(elapsed, limit)));
    }
    if errors.is_empty() {
        Check::new(
            true,
            format!("{} files, {placeholders} placeholders, {}", paths.len(), within(elapsed, limit)),
        )
    } else {
        Check::fail(format!("{} problems; first: {}", errors.len(), errors[0]))
    }
}

// ---------------------------------------------------------------- retrieval oracle

/// Brute-force CSLS, written from the definition without reusing index code.
pub struct OracleIndex {
    ids: Vec<String>,
    vecs: Vec<Vec<f32>>,
    tags: Vec<TagSet>,
    n: usize,
    radius: Vec<f64>,
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut ab = 0f64;
    let mut aa = 0f64;
    let mut bb = 0f64;
    for i in 0..a.len() {
        ab += a[i] as f64 * b[i] as f64;
        aa += a[i] as f64 * a[i] as f64;
        bb += b[i] as f64 * b[i] as f64;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

fn top_mean(mut v: Vec<f64>, n: usize) -> f64 {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let take = n.min(v.len());
    if take == 0 {
        return 0.0;
    }
    v[..take].iter().sum::<f64>() / take as f64
}

impl OracleIndex {
    pub fn new(ids: Vec<String>, vecs: Vec<Vec<f32>>, tags: Vec<TagSet>, n: usize) -> Self {
        let m = ids.len();
        let mut cos = vec![vec![0f64; m]; m];
        for i in 0..m {
            for j in (i + 1)..m {
                let c = cosine(&vecs[i], &vecs[j]);
                cos[i][j] = c;
                cos[j][i] = c;
            }
        }
        let radius = (0..m)
            .map(|i| top_mean((0..m).filter(|&j| j != i).map(|j| cos[i][j]).collect(), n))
            .collect();
        OracleIndex { ids, vecs, tags, n, radius }
    }

    /// (id, adjusted score) in rank order.
    pub fn topk(&self, q: &[f32], qtags: &TagSet, self_id: Option<&str>, k: usize, alpha: f64) -> Vec<(String, f64)> {
        let cands: Vec<usize> = (0..self.ids.len()).filter(|&i| Some(self.ids[i].as_str()) != self_id).collect();
        let qcos: Vec<f64> = (0..self.ids.len()).map(|i| cosine(q, &self.vecs[i])).collect();
        let rq = top_mean(cands.iter().map(|&i| qcos[i]).collect(), self.n);
        let mut scored: Vec<(String, f64)> = cands
            .iter()
            .map(|&i| {
                let raw = 2.0 * qcos[i] - rq - self.radius[i];
                let disjoint = !qtags.is_empty() && !self.tags[i].is_empty() && qtags.is_disjoint(&self.tags[i]);
                (self.ids[i].clone(), if disjoint { alpha * raw } else { raw })
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        // Scores equal up to rounding form one tie group, ordered by id.
        let mut ranked = Vec::with_capacity(scored.len());
        let mut i = 0;
        while i < scored.len() {
            let mut j = i + 1;
            while j < scored.len() && (scored[j - 1].1 - scored[j].1).abs() <= 1e-12 {
                j += 1;
            }
            let mut group = scored[i..j].to_vec();
            group.sort_by(|a, b| a.0.cmp(&b.0));
            ranked.extend(group);
            i = j;
        }
        ranked.truncate(k);
        ranked
    }
}

fn random_tags(rng: &mut ChaCha8Rng) -> TagSet {
    FunctionTag::ALL.into_iter().filter(|_| rng.gen_bool(0.3)).collect()
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize, integral: bool) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..d)
            .map(|_| if integral { rng.gen_range(-2i32..=2) as f32 } else { rng.gen_range(-1.0f32..1.0) })
            .collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// One randomized index compared against the oracle on several queries.
pub fn retrieval_trial(rng: &mut ChaCha8Rng, d: usize, size: usize, n: usize) -> Result<usize, String> {
    let integral = d == 16 && rng.gen_bool(0.5);
    let mut vecs: Vec<Vec<f32>> = Vec::with_capacity(size);
    while vecs.len() < size {
        // Exact duplicates force tied scores.
        if !vecs.is_empty() && rng.gen_bool(0.1) {
            let j = rng.gen_range(0..vecs.len());
            vecs.push(vecs[j].clone());
        } else {
            vecs.push(random_vector(rng, d, integral));
        }
    }
    let ids: Vec<String> = (0..size).map(|i| format!("p{:04}", (i * 7919) % 10_000)).collect();
    let tags: Vec<TagSet> = (0..size).map(|_| random_tags(rng)).collect();
    let entries: Vec<IndexEntry> = (0..size)
        .map(|i| IndexEntry {
            pair_id: ids[i].clone(),
            vector: EmbeddingVector::new(vecs[i].clone()).unwrap(),
            tags: tags[i].clone(),
        })
        .collect();
    let idx = Index::from_entries(entries, n, "oracle-test").map_err(|e| e.to_string())?;
    let oracle = OracleIndex::new(ids.clone(), vecs.clone(), tags.clone(), n);
    let mut queries = 0;
    for _ in 0..3 {
        let alpha = [0.5, 0.9, 1.0][rng.gen_range(0..3)];
        let k = rng.gen_range(1..=5.min(size - 1));
        let (qv, qtags, self_id) = if rng.gen_bool(0.5) {
            let j = rng.gen_range(0..size);
            (vecs[j].clone(), tags[j].clone(), Some(ids[j].clone()))
        } else {
            (random_vector(rng, d, integral), random_tags(rng), None)
        };
        let qvec = EmbeddingVector::new(qv.clone()).unwrap();
        let cfg = RetrievalConfig {
            k,
            alpha,
            csls_neighborhood: n,
        };
        let q = Query {
            vector: &qvec,
            tags: &qtags,
            self_id: self_id.as_deref(),
        };
        let got = idx.retrieve_topk(&q, &cfg, RetrievalMode::Similar, 0).map_err(|e| e.to_string())?;
        let want = oracle.topk(&qv, &qtags, self_id.as_deref(), k, alpha);
        let got_ids: Vec<&str> = got.iter().map(|c| c.pair_id.as_str()).collect();
        let want_ids: Vec<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
        if got_ids != want_ids {
            return Err(format!("d={d} size={size} N={n} k={k}: got {got_ids:?}, oracle {want_ids:?}"));
        }
        for (c, (_, s)) in got.iter().zip(&want) {
            let a = c.adjusted.unwrap();
            if (a - s).abs() > 1e-9 {
                return Err(format!("score {a} vs oracle {s}"));
            }
        }
        queries += 1;
    }
    Ok(queries)
}

pub fn retrieval_oracle_suite(trials: usize) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    let mut queries = 0;
    for t in 0..trials {
        let d = if t % 2 == 0 { 16 } else { 1024 };
        let n = [1, 5, 10][t % 3];
        // Log-uniform sizes, with the maximum size hit once per dimension.
        let size = if t < 2 {
            1000
        } else {
            let lo = (n + 7) as f64;
            (lo * (1000.0 / lo).powf(rng.gen::<f64>())).round() as usize
        };
        match retrieval_trial(&mut rng, d, size.clamp(n + 7, 1000), n) {
            Ok(q) => queries += q,
            Err(e) => return Check::fail(format!("trial {t}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(60);
    Check::new(
        elapsed <= limit,
        format!("{trials} indices, {queries} queries, exact order, {}", within(elapsed, limit)),
    )
}

/// Penalty law: matching tags keep the raw score, disjoint non-empty tags
/// scale it by alpha, and with raw >= 0 the penalty never raises a rank.
pub fn penalty_law_holds(raw: f64, alpha: f64, q: &TagSet, c: &TagSet) -> Result<(), String> {
    let m = index::tags_match(q, c);
    let expect_match = q.is_empty() || c.is_empty() || !q.is_disjoint(c);
    if m != expect_match {
        return Err(format!("tags_match({q:?}, {c:?}) = {m}"));
    }
    let adj = index::apply_penalty(raw, m, alpha);
    let want = if m { raw } else { alpha * raw };
    if adj != want {
        return Err(format!("penalty({raw}, {m}, {alpha}) = {adj}, want {want}"));
    }
    if raw >= 0.0 && adj > raw {
        return Err(format!("penalty raised {raw} to {adj}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- end to end

pub struct Setup {
    pub jobs: Vec<DecompJob>,
    pub res: Resources,
}

pub fn exemplar_corpus() -> Corpus {
    let (inputs, skipped) = corpus::inputs_from_dir(&fixtures().join("corpus_src"), "exemplars").unwrap();
    assert!(skipped.is_empty(), "{skipped:?}");
    let b = corpus::build_corpus(&inputs);
    assert!(b.manifest.skipped.is_empty(), "{:?}", b.manifest.skipped);
    b.corpus
}

pub fn setup() -> Setup {
    let bundles = load_bundles(&fixtures().join("bundles")).unwrap();
    let (jobs, skipped) = orchestrator::prepare_jobs(&bundles);
    assert!(skipped.is_empty(), "{skipped:?}");
    let corpus = exemplar_corpus();
    let idx = index::build_index(&corpus, &HashingEmbedder::new(1024), 10).unwrap();
    let res = Resources::new(RuleRegistry::builtin(), Classifier::default())
        .with_retrieval(corpus, idx, None)
        .unwrap();
    Setup { jobs, res }
}

pub fn run_config(mode: Mode, workers: usize) -> RunConfig {
    RunConfig {
        mode,
        worker_count: workers,
        retry: ctxdecomp::llm::RetryPolicy::no_delay(0),
        rule_flag: Some("-ftree-coalesce-vars".into()),
        ..RunConfig::default()
    }
}

pub fn mutilate(src: &str) -> String {
    src.replace(';', "")
}

pub fn e2e_echo(s: &Setup) -> Check {
    let start = Instant::now();
    let client = orchestrator::oracle_client(&s.jobs, str::to_string);
    let run = match orchestrator::run_batch(&run_config(Mode::Icl4dR, 4), Mode::Icl4dR, &s.res, &client, &s.jobs, None) {
        Ok(r) => r,
        Err(e) => return Check::fail(e.to_string()),
    };
    let overall = run.overall.clone().unwrap();
    let elapsed = start.elapsed();
    let bad: Vec<String> = run
        .records
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} {:?} {}", r.sample_id, r.status, r.error.clone().unwrap_or_else(|| r.stderr.clone())))
        .collect();
    Check::new(
        overall.esr_display() == "1.0000" && run.records.len() == 20 && elapsed < Duration::from_secs(120),
        if bad.is_empty() {
            format!("ESR {} over {} samples, {}", overall.esr_display(), overall.total, within(elapsed, Duration::from_secs(120)))
        } else {
            format!("ESR {}; first failure: {}", overall.esr_display(), bad[0])
        },
    )
}

pub fn e2e_mutilated(s: &Setup) -> Check {
    let start = Instant::now();
    let client = orchestrator::oracle_client(&s.jobs, mutilate);
    let run = match orchestrator::run_batch(&run_config(Mode::Icl4dR, 4), Mode::Icl4dR, &s.res, &client, &s.jobs, None) {
        Ok(r) => r,
        Err(e) => return Check::fail(e.to_string()),
    };
    let overall = run.overall.clone().unwrap();
    let syntax = run
        .records
        .iter()
        .filter(|r| r.category == Some(ErrorCategory::Syntax))
        .count();
    let elapsed = start.elapsed();
    Check::new(
        overall.esr_display() == "0.0000" && syntax == run.records.len() && elapsed < Duration::from_secs(120),
        format!(
            "ESR {}, Syntax {}/{}, {}",
            overall.esr_display(),
            syntax,
            run.records.len(),
            within(elapsed, Duration::from_secs(120))
        ),
    )
}

pub fn sorted_lines(mode: Mode, workers: usize, s: &Setup) -> Vec<String> {
    let client = orchestrator::oracle_client(&s.jobs, |src| {
        // Every third sample fails, so records differ in more than status.
        if src.len() % 3 == 0 {
            mutilate(src)
        } else {
            src.to_string()
        }
    });
    let run = orchestrator::run_batch(&run_config(mode, workers), mode, &s.res, &client, &s.jobs, None).unwrap();
    run.records.iter().map(orchestrator::record_line).collect()
}

pub fn determinism(s: &Setup) -> Check {
    for mode in [Mode::Icl4dR, Mode::RandomRetrieval] {
        let one = sorted_lines(mode, 1, s);
        let eight = sorted_lines(mode, 8, s);
        if one != eight {
            let at = one.iter().zip(&eight).position(|(a, b)| a != b);
            return Check::fail(format!("{mode}: records differ at {at:?}"));
        }
    }
    Check::new(true, "icl4d_r and random_retrieval, 20 records each, byte-identical")
}

pub fn ablation_fairness(s: &Setup) -> Check {
    let cfg = run_config(Mode::Icl4dR, 1);
    let mut worst: f64 = 0.0;
    for j in &s.jobs {
        let sim = orchestrator::build_prompt(j, Mode::Icl4dR, &cfg, &s.res).unwrap();
        let rnd = orchestrator::build_prompt(j, Mode::RandomRetrieval, &cfg, &s.res).unwrap();
        if sim.exemplar_ids.len() != rnd.exemplar_ids.len() {
            return Check::fail(format!(
                "{}: {} similar vs {} random exemplars",
                j.sample_id,
                sim.exemplar_ids.len(),
                rnd.exemplar_ids.len()
            ));
        }
        let dev = (rnd.text.len() as f64 - sim.text.len() as f64).abs() / sim.text.len() as f64;
        worst = worst.max(dev);
    }
    Check::new(
        worst <= 0.10,
        format!("{} samples, equal counts, worst length deviation {:.1}%", s.jobs.len(), worst * 100.0),
    )
}

// ---------------------------------------------------------------- triage

#[derive(serde::Deserialize)]
pub struct TriageCase {
    pub id: String,
    pub label: String,
    pub status: String,
    pub stderr: String,
}

pub fn triage_cases() -> Vec<TriageCase> {
    std::fs::read_to_string(fixtures().join("triage/corpus.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn triage_agreement() -> Check {
    let cases = triage_cases();
    let c = Classifier::default();
    let mut correct = 0;
    let mut misses = Vec::new();
    let labels: BTreeSet<String> = cases.iter().map(|t| t.label.clone()).collect();
    for t in &cases {
        let status: ExecStatus = t.status.parse().unwrap();
        let want: ErrorCategory = t.label.parse().unwrap();
        let got = c.classify(&t.stderr, status).map(|(cat, _)| cat);
        if got == Some(want) {
            correct += 1;
        } else {
            misses.push(format!("{}: {:?} vs {}", t.id, got, t.label));
        }
    }
    Check::new(
        correct >= 48 && cases.len() == 50 && labels.len() == 7,
        format!("{correct}/{} agree, {} categories; misses: {misses:?}", cases.len(), labels.len()),
    )
}

// ---------------------------------------------------------------- flags

/// Each active flag, when disabled, changes one token of the output.
pub struct PlantedCompiler {
    pub active: Vec<String>,
}

impl AsmCompiler for PlantedCompiler {
    fn id(&self) -> String {
        "planted".into()
    }

    fn compile(&self, _source: &str, base: &[String], toggles: &[(&str, bool)]) -> Result<Vec<String>, FlagsError> {
        let mut out: Vec<String> = base.to_vec();
        for a in &self.active {
            let on = toggles.iter().rev().find(|(f, _)| f == a).is_none_or(|(_, e)| *e);
            out.push(if on { format!("{a}:on") } else { format!("{a}:off") });
        }
        Ok(out)
    }
}

pub fn planted_flags() -> Vec<FlagCandidate> {
    (0..8)
        .map(|i| FlagCandidate {
            name: format!("-fplanted-{i}"),
            group: Some(if i < 4 { "g1".into() } else { "g2".into() }),
        })
        .collect()
}

pub fn planted_bisection() -> Check {
    let flags = planted_flags();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..20 {
        let a = rng.gen_range(0..8);
        let b = (a + rng.gen_range(1..8)) % 8;
        let active = vec![flags[a].name.clone(), flags[b].name.clone()];
        let compiler = PlantedCompiler { active: active.clone() };
        let probe = Probe::new(&compiler, "", vec!["-O1".into()]);
        let bis = flags::bisect_groups(&flags, &probe).unwrap();
        let ex_probe = Probe::new(&compiler, "", vec!["-O1".into()]);
        let ex = flags::exhaustive(&flags, &ex_probe);
        let mut want: Vec<&str> = active.iter().map(String::as_str).collect();
        want.sort();
        let mut got = bis.active_flags();
        got.sort();
        let mut ex_got = ex.active_flags();
        ex_got.sort();
        if ex_got != want || got != want {
            return Check::fail(format!("trial {trial}: bisect {got:?}, exhaustive {ex_got:?}, planted {want:?}"));
        }
    }
    Check::new(true, "20 random 2-of-8 plantings recovered exactly, confirmed exhaustively")
}

pub fn frame_pointer_probe() -> Check {
    let start = Instant::now();
    let source = std::fs::read_to_string(fixtures().join("flags/frame.c")).unwrap();
    let gcc = GccCompiler::new("gcc");
    let o1: Vec<FlagCandidate> = flags::builtin_flag_list()
        .into_iter()
        .filter(|f| f.group.as_deref() == Some("O1"))
        .collect();
    let probe = Probe::new(&gcc, &source, vec!["-O1".into()]);
    let outcome = match flags::bisect_groups(&o1, &probe) {
        Ok(o) => o,
        Err(e) => return Check::fail(e.to_string()),
    };
    let active = outcome.active_flags();
    let elapsed = start.elapsed();
    Check::new(
        active.contains(&"-fomit-frame-pointer") && elapsed < Duration::from_secs(120),
        format!(
            "{}; {} O1 flags, {} compiles, active {:?}, {}",
            ctxdecomp::harness::compiler_version("gcc").unwrap_or_else(|| "gcc version unknown".into()),
            o1.len(),
            outcome.compiles,
            active,
            within(elapsed, Duration::from_secs(120))
        ),
    )
}

// ---------------------------------------------------------------- timeouts

pub fn fixture_text(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap()
}

pub fn timeout_case(candidate: &str, driver: &str, want: ExecStatus) -> Check {
    let h = TestHarness {
        driver_source: driver.to_string(),
        ..Default::default()
    };
    let start = Instant::now();
    let out = harness::evaluate_candidate(candidate, &h, &HarnessConfig::default());
    let elapsed = start.elapsed();
    match out {
        Ok(o) => Check::new(
            o.status == want && elapsed <= Duration::from_secs(6),
            format!("{} in {}", o.status, within(elapsed, Duration::from_secs(6))),
        ),
        Err(e) => Check::fail(e.to_string()),
    }
}

pub fn sleeping_driver() -> Check {
    timeout_case(
        &fixture_text("harness/sleep_candidate.c"),
        &fixture_text("harness/sleep_driver.c"),
        ExecStatus::RunTimeout,
    )
}

pub fn preprocessor_bomb() -> Check {
    timeout_case(
        &fixture_text("harness/bomb_candidate.c"),
        "int main(void) { return func0(1) ? 0 : 1; }\n",
        ExecStatus::CompileTimeout,
    )
}

pub fn tag_counts(paths: &[PathBuf]) -> BTreeMap<FunctionTag, usize> {
    let mut counts = BTreeMap::new();
    for p in paths {
        let text = std::fs::read_to_string(p).unwrap();
        let includes = ctxdecomp::ctoken::include_headers(&text);
        let src = asmnorm::canonicalize_source(&text).unwrap();
        for t in corpus::tag_source(&src, &includes) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    counts
}
