use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ctxdecomp::corpus::{self, Corpus};
use ctxdecomp::flags::{self, FlagCandidate, GccCompiler, Probe};
use ctxdecomp::harness::{self, load_bundles, HarnessConfig};
use ctxdecomp::index::{self, HashingEmbedder, ServiceEmbedder};
use ctxdecomp::orchestrator::{self, report, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "ctxdecomp", version, about = "Context-guided decompilation of x86-64 assembly into C")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check exemplar corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Build retrieval indices.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Find optimization flags that change generated code.
    #[command(subcommand)]
    Flags(FlagsCmd),
    /// Run a decompilation batch.
    #[command(subcommand)]
    Decompile(DecompileCmd),
    /// Summaries computed from result files.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Evaluate existing candidates against harness bundles.
    #[command(subcommand)]
    Harness(HarnessCmd),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Build a corpus from NAME.c / NAME.OL.s pairs.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "train")]
        dataset: String,
        /// Where to write the manifest; defaults to OUT.manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Fail if two id sets share an id.
    CheckDisjoint { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Embed every corpus pair and write an index file
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `fallback` for the built-in hashing embedder, or a service URL.
        #[arg(long, default_value = "fallback")]
        provider: String,
        #[arg(long, default_value_t = index::embed::DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        neighborhood: usize,
    },
}

#[derive(Subcommand)]
enum FlagsCmd {
    /// Toggle flags per sample and rank them by activation frequency
    Probe(ProbeArgs),
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "gcc")]
    compiler: String,
    #[arg(long, value_delimiter = ',', default_value = "O1,O2,O3")]
    levels: Vec<String>,
    /// Candidate list; defaults to the built-in list.
    #[arg(long)]
    flags: Option<PathBuf>,
    /// Test each flag on its own instead of bisecting.
    #[arg(long)]
    exhaustive: bool,
    /// Per-sample results as JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DecompileCmd {
    /// Prompt, generate and evaluate every bundle, appending result records
    Run {
        /// Overrides the mode in the config file.
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        config: PathBuf,
        /// Overrides paths.output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Retry this run's O1-O3 failures with the given rule.
        #[arg(long)]
        second_attempt: Option<String>,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// ESR per dataset, optimization level and mode.
    Esr { results: Vec<PathBuf> },
    /// Failure category distribution per group.
    Errors { results: Vec<PathBuf> },
    /// Outcome transitions between two runs.
    Transitions { a: PathBuf, b: PathBuf },
    /// ESR by complexity and length bins.
    Strata {
        #[arg(long)]
        bundles: PathBuf,
        results: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Candidates are `SAMPLE_ID.c` files.
    Eval {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Corpus(c) => corpus_cmd(c),
        Command::Index(IndexCmd::Build {
            corpus,
            out,
            provider,
            dim,
            neighborhood,
        }) => index_build(&corpus, &out, &provider, dim, neighborhood),
        Command::Flags(FlagsCmd::Probe(a)) => flags_probe(a),
        Command::Decompile(DecompileCmd::Run {
            mode,
            config,
            out,
            second_attempt,
        }) => decompile_run(mode, &config, out, second_attempt),
        Command::Report(r) => report_cmd(r),
        Command::Harness(HarnessCmd::Eval {
            candidates,
            bundles,
            jobs,
        }) => harness_eval(&candidates, &bundles, jobs),
    }
}

fn corpus_cmd(c: CorpusCmd) -> Result<()> {
    match c {
        CorpusCmd::Build {
            input,
            out,
            dataset,
            manifest,
        } => {
            let (inputs, unreadable) = corpus::inputs_from_dir(&input, &dataset)?;
            let mut build = corpus::build_corpus(&inputs);
            build.manifest.skipped.extend(unreadable);
            build.corpus.save(&out)?;
            let manifest_path = manifest.unwrap_or_else(|| with_suffix(&out, ".manifest.json"));
            fs::write(&manifest_path, build.manifest.to_json())
                .with_context(|| format!("writing {}", manifest_path.display()))?;
            println!(
                "{} pairs ({} duplicates dropped, {} skipped) -> {}",
                build.manifest.total_pairs,
                build.manifest.duplicates_dropped,
                build.manifest.skipped.len(),
                out.display()
            );
            Ok(())
        }
        CorpusCmd::CheckDisjoint { a, b } => {
            let r = corpus::check_disjoint(&corpus::read_id_set(&a)?, &corpus::read_id_set(&b)?);
            if !r.passed() {
                for id in &r.shared {
                    println!("{id}");
                }
                bail!("{} ids are shared", r.shared.len());
            }
            println!("disjoint");
            Ok(())
        }
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn index_build(corpus: &Path, out: &Path, provider: &str, dim: usize, neighborhood: usize) -> Result<()> {
    let corpus = Corpus::load(corpus)?;
    let idx = if provider == "fallback" {
        index::build_index(&corpus, &HashingEmbedder::new(dim), neighborhood)?
    } else {
        index::build_index(&corpus, &ServiceEmbedder::connect(provider)?, neighborhood)?
    };
    idx.save(out)?;
    println!("{} entries, d={}, provider {} -> {}", idx.len(), idx.dim(), idx.provider_id(), out.display());
    Ok(())
}

fn flags_probe(a: ProbeArgs) -> Result<()> {
    let candidates: Vec<FlagCandidate> = match &a.flags {
        Some(p) => flags::load_flag_list(p)?,
        None => flags::builtin_flag_list(),
    };
    let corpus = Corpus::load(&a.corpus)?;
    let compiler = GccCompiler::new(&a.compiler);
    let mut results = Vec::new();
    for level in &a.levels {
        let level: ctxdecomp::asmnorm::OptLevel = level.parse().map_err(anyhow::Error::msg)?;
        let level_flags: Vec<FlagCandidate> = candidates
            .iter()
            .filter(|f| f.group.as_deref().is_none_or(|g| g == level.to_string()))
            .cloned()
            .collect();
        if level_flags.is_empty() {
            continue;
        }
        let per_sample: Vec<_> = corpus
            .pairs()
            .par_iter()
            .map(|p| {
                let probe = Probe::new(&compiler, &p.src.body, vec![level.as_flag().to_string()]);
                let outcome = if a.exhaustive {
                    Ok(flags::exhaustive(&level_flags, &probe))
                } else {
                    flags::bisect_groups(&level_flags, &probe)
                };
                outcome.map(|o| o.results(&format!("{}@{level}", p.id)))
            })
            .collect::<Result<_, _>>()?;
        results.extend(per_sample.into_iter().flatten());
    }
    if let Some(out) = &a.out {
        let lines: Vec<String> = results.iter().map(|r| serde_json::to_string(r).expect("serializes")).collect();
        fs::write(out, lines.join("\n") + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    let ranked = flags::rank_flags(&results);
    println!("flag\tactive\tdecidable\tfrequency");
    for f in &ranked.ranked {
        println!("{}\t{}\t{}\t{:.4}", f.flag, f.active, f.decidable, f.frequency);
    }
    if !ranked.no_decidable_samples.is_empty() {
        println!("undecidable: {}", ranked.no_decidable_samples.join(" "));
    }
    Ok(())
}

fn decompile_run(mode: Option<Mode>, config: &Path, out: Option<PathBuf>, second: Option<String>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if out.is_some() {
        cfg.paths.output = out;
    }
    cfg.validate()?;
    let res = cfg.load_resources()?;
    let bundles_dir = cfg.paths.bundles.clone().context("paths.bundles is not set")?;
    let bundles = load_bundles(&bundles_dir)?;
    let (mut jobs, skipped) = orchestrator::prepare_jobs(&bundles);
    for s in &skipped {
        log::warn!("skipping {}: {}", s.sample_id, s.reason);
    }
    if !cfg.opt_levels.is_empty() {
        jobs.retain(|j| cfg.opt_levels.contains(&j.opt_level));
    }
    let client = cfg.build_client(&jobs)?;
    let run = orchestrator::run_batch(&cfg, cfg.mode, &res, client.as_ref(), &jobs, cfg.paths.output.as_deref())?;
    print!("{}", report::render_esr(&run.esr));
    println!("compiler {}", compiler_line(&cfg.harness.compiler));
    if let Some(o) = &run.overall {
        println!("overall {o} (resumed {})", run.resumed);
    }
    if let Some(flag) = second {
        let sa = orchestrator::second_attempt_rules(&run, &jobs, &flag, &cfg, &res, client.as_ref())?;
        let fmt = |e: Option<f64>| e.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "second attempt on {} samples: rule {} {}, re-feed {}",
            sa.rule_run.records.len(),
            flag,
            fmt(sa.rule_esr()),
            fmt(sa.refeed_esr())
        );
    }
    Ok(())
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<orchestrator::DecompResult>> {
    if paths.is_empty() {
        bail!("no result files given");
    }
    let mut out = Vec::new();
    for p in paths {
        out.extend(orchestrator::read_results(p)?);
    }
    Ok(out)
}

fn report_cmd(r: ReportCmd) -> Result<()> {
    match r {
        ReportCmd::Esr { results } => print!("{}", report::render_esr(&report::esr_by_key(&read_all(&results)?))),
        ReportCmd::Errors { results } => {
            print!("{}", report::render_distribution(&report::error_distribution(&read_all(&results)?)?))
        }
        ReportCmd::Transitions { a, b } => {
            let m = report::transition_matrix(&orchestrator::read_results(&a)?, &orchestrator::read_results(&b)?)?;
            print!("{}", report::render_transitions(&m));
        }
        ReportCmd::Strata { bundles, results } => {
            let (jobs, _) = orchestrator::prepare_jobs(&load_bundles(&bundles)?);
            let metrics = orchestrator::job_metrics(&jobs);
            print!("{}", report::render_strata(&report::stratified_report(&read_all(&results)?, &metrics)));
        }
    }
    Ok(())
}

fn harness_eval(candidates: &Path, bundles: &Path, jobs: usize) -> Result<()> {
    let bundles = load_bundles(bundles)?;
    let mut pairs = Vec::new();
    let mut missing = 0;
    for b in &bundles {
        let path = candidates.join(format!("{}.c", b.meta.sample_id));
        match fs::read_to_string(&path) {
            Ok(src) => pairs.push((b, src)),
            Err(_) => missing += 1,
        }
    }
    let cfg = HarnessConfig::default();
    let work: Vec<(String, ctxdecomp::harness::TestHarness)> =
        pairs.iter().map(|(b, src)| (src.clone(), b.harness.clone())).collect();
    let outcomes = harness::evaluate_all(&work, &cfg, jobs.max(1))?;
    let mut statuses = Vec::new();
    let mut by_status: BTreeMap<&str, usize> = BTreeMap::new();
    for ((b, _), o) in pairs.iter().zip(&outcomes) {
        let o = o.as_ref().map_err(|e| anyhow::anyhow!("{}: {e}", b.meta.sample_id))?;
        println!("{}\t{}", b.meta.sample_id, o.status);
        *by_status.entry(o.status.as_str()).or_default() += 1;
        statuses.push(o.status);
    }
    for _ in 0..missing {
        statuses.push(harness::ExecStatus::CompileFail);
    }
    if missing > 0 {
        println!("{missing} bundles without a candidate counted as failures");
    }
    for (s, n) in by_status {
        println!("{s}: {n}");
    }
    println!("compiler {}", compiler_line(&cfg.compiler));
    println!("ESR {}", harness::esr(&statuses)?);
    Ok(())
}

fn compiler_line(compiler: &str) -> String {
    harness::compiler_version(compiler).unwrap_or_else(|| format!("{compiler} (version unknown)"))
}
