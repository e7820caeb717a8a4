//! Recompile-and-run evaluation of candidate sources.
//!
//! A candidate is compiled at `-O0` together with its test driver in a fresh
//! temporary directory, then run there. Compilation and execution each get
//! their own wall-clock budget (5 s by default). Failures the compiler or the
//! program do not describe themselves get a `[harness]` line appended to the
//! captured stderr so every non-passing outcome carries some text.

pub mod bundle;
pub mod sandbox;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::process::Command;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundle::{load_bundles, BundleMeta, HarnessBundle};

/// Headers made visible to every candidate, since model output often omits
/// its includes.
pub const PRELUDE: &str = "#include <assert.h>\n#include <ctype.h>\n#include <limits.h>\n#include <math.h>\n#include <stdbool.h>\n#include <stdint.h>\n#include <stdio.h>\n#include <stdlib.h>\n#include <string.h>\n";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("sandbox failure: {0}")]
    SandboxFailure(String),
    #[error("candidate source is empty")]
    EmptyCandidate,
    #[error("no outcomes to report")]
    EmptyInput,
    #[error("bad bundle {path}: {message}")]
    BadBundle { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Pass,
    CompileFail,
    RunFail,
    OutputMismatch,
    CompileTimeout,
    RunTimeout,
}

impl ExecStatus {
    pub const ALL: [ExecStatus; 6] = [
        ExecStatus::Pass,
        ExecStatus::CompileFail,
        ExecStatus::RunFail,
        ExecStatus::OutputMismatch,
        ExecStatus::CompileTimeout,
        ExecStatus::RunTimeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExecStatus::Pass => "pass",
            ExecStatus::CompileFail => "compile_fail",
            ExecStatus::RunFail => "run_fail",
            ExecStatus::OutputMismatch => "output_mismatch",
            ExecStatus::CompileTimeout => "compile_timeout",
            ExecStatus::RunTimeout => "run_timeout",
        }
    }

    pub fn is_timeout(self) -> bool {
        matches!(self, ExecStatus::CompileTimeout | ExecStatus::RunTimeout)
    }
}

impl fmt::Display for ExecStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExecStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExecStatus::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestHarness {
    /// Defines `main` and exercises `func0`.
    pub driver_source: String,
    pub expected_stdout: Option<String>,
    /// Extra files (name, contents) placed next to the sources.
    pub link_inputs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    #[serde(with = "duration_ms")]
    pub compile_time: Duration,
    #[serde(with = "duration_ms")]
    pub run_time: Duration,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub compiler: String,
    pub opt_flag: String,
    pub extra_flags: Vec<String>,
    pub compile_timeout_ms: u64,
    pub run_timeout_ms: u64,
    pub memory_limit_mb: u64,
    pub output_cap_bytes: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            compiler: "gcc".into(),
            opt_flag: "-O0".into(),
            extra_flags: Vec::new(),
            compile_timeout_ms: 5_000,
            run_timeout_ms: 5_000,
            memory_limit_mb: 1024,
            output_cap_bytes: 1 << 20,
        }
    }
}

/// First line of `compiler --version`, e.g. `gcc (Ubuntu 11.4.0-1ubuntu1~22.04) 11.4.0`.
pub fn compiler_version(compiler: &str) -> Option<String> {
    let out = Command::new(compiler).arg("--version").output().ok()?;
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines().next().map(|l| l.trim().to_string()).filter(|l| !l.is_empty())
}

fn base_env(cmd: &mut Command, tmp: &std::path::Path) {
    cmd.env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_else(|| "/usr/bin:/bin".into()))
        .env("LC_ALL", "C")
        .env("LANG", "C")
        .env("TMPDIR", tmp)
        .current_dir(tmp);
}

/// Replaces per-run temporary names so identical failures read identically.
fn scrub_paths(text: &str, dir: &std::path::Path) -> String {
    static TEMP_OBJ: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    let re = TEMP_OBJ.get_or_init(|| regex::Regex::new(r"\bcc[A-Za-z0-9]{6}\.(o|s)\b").expect("valid pattern"));
    let text = text.replace(&format!("{}/", dir.display()), "").replace(&dir.display().to_string(), ".");
    re.replace_all(&text, "ccXXXXXX.$1").into_owned()
}

fn same_output(got: &str, expected: &str) -> bool {
    got.trim_end_matches(['\n', '\r']) == expected.trim_end_matches(['\n', '\r'])
}

fn with_marker(mut stderr: String, marker: &str) -> String {
    if !stderr.is_empty() && !stderr.ends_with('\n') {
        stderr.push('\n');
    }
    stderr.push_str("[harness] ");
    stderr.push_str(marker);
    stderr.push('\n');
    stderr
}

/// The single translation unit compiled for a candidate.
pub fn compose_unit(candidate: &str, driver: &str) -> String {
    let mut unit = String::from(PRELUDE);
    unit.push_str(candidate);
    if !candidate.ends_with('\n') {
        unit.push('\n');
    }
    unit.push('\n');
    unit.push_str(driver);
    if !driver.ends_with('\n') {
        unit.push('\n');
    }
    unit
}

/// Compiles `candidate` with the harness driver and runs it.
pub fn evaluate_candidate(
    candidate: &str,
    harness: &TestHarness,
    cfg: &HarnessConfig,
) -> Result<ExecOutcome, HarnessError> {
    if candidate.trim().is_empty() {
        return Err(HarnessError::EmptyCandidate);
    }
    let dir = tempfile::Builder::new()
        .prefix("ctxdecomp-eval-")
        .tempdir()
        .map_err(|e| HarnessError::SandboxFailure(format!("temp dir: {e}")))?;
    let write = |name: &str, text: &str| {
        std::fs::write(dir.path().join(name), text)
            .map_err(|e| HarnessError::SandboxFailure(format!("write {name}: {e}")))
    };
    write("candidate.c", &compose_unit(candidate, &harness.driver_source))?;
    for (name, text) in &harness.link_inputs {
        write(name, text)?;
    }

    let mut cc = Command::new(&cfg.compiler);
    base_env(&mut cc, dir.path());
    cc.arg(&cfg.opt_flag)
        .args(["-fdiagnostics-color=never", "-fno-diagnostics-show-caret"])
        .args(&cfg.extra_flags)
        .args(["candidate.c", "-o", "prog", "-lm"]);
    let compile = sandbox::run(
        cc,
        sandbox::Limits {
            wall: Duration::from_millis(cfg.compile_timeout_ms),
            address_space: 0,
            cpu_secs: 0,
            file_size: 256 << 20,
            isolate_network: false,
        },
        cfg.output_cap_bytes,
    )
    .map_err(|e| HarnessError::SandboxFailure(format!("cannot run {}: {e}", cfg.compiler)))?;

    let mut outcome = ExecOutcome {
        status: ExecStatus::CompileFail,
        stdout: String::new(),
        stderr: scrub_paths(&compile.stderr, dir.path()),
        exit_code: compile.exit_code,
        compile_time: compile.elapsed,
        run_time: Duration::ZERO,
    };
    if compile.timed_out {
        outcome.status = ExecStatus::CompileTimeout;
        outcome.stderr = with_marker(
            outcome.stderr,
            &format!("compilation timed out after {} ms", cfg.compile_timeout_ms),
        );
        return Ok(outcome);
    }
    if !compile.success() {
        if outcome.stderr.trim().is_empty() {
            outcome.stderr = with_marker(String::new(), "compiler failed without diagnostics");
        }
        return Ok(outcome);
    }

    let mut prog = Command::new(dir.path().join("prog"));
    std::os::unix::process::CommandExt::arg0(&mut prog, "./prog");
    base_env(&mut prog, dir.path());
    let run = sandbox::run(
        prog,
        sandbox::Limits {
            wall: Duration::from_millis(cfg.run_timeout_ms),
            address_space: cfg.memory_limit_mb << 20,
            cpu_secs: cfg.run_timeout_ms.div_ceil(1000) + 1,
            file_size: 16 << 20,
            isolate_network: true,
        },
        cfg.output_cap_bytes,
    )
    .map_err(|e| HarnessError::SandboxFailure(format!("cannot run candidate: {e}")))?;

    outcome.stdout = run.stdout;
    outcome.stderr = scrub_paths(&run.stderr, dir.path());
    outcome.exit_code = run.exit_code;
    outcome.run_time = run.elapsed;
    if run.timed_out {
        outcome.status = ExecStatus::RunTimeout;
        outcome.stderr = with_marker(
            outcome.stderr,
            &format!("execution timed out after {} ms", cfg.run_timeout_ms),
        );
    } else if let Some(sig) = run.signal {
        outcome.status = ExecStatus::RunFail;
        outcome.stderr = with_marker(
            outcome.stderr,
            &format!("terminated by signal {sig} ({})", sandbox::signal_name(sig)),
        );
    } else if run.exit_code != Some(0) {
        outcome.status = ExecStatus::RunFail;
        if outcome.stderr.trim().is_empty() {
            outcome.stderr = with_marker(
                outcome.stderr,
                &format!("exited with status {}", run.exit_code.unwrap_or(-1)),
            );
        }
    } else if harness
        .expected_stdout
        .as_deref()
        .is_some_and(|exp| !same_output(&outcome.stdout, exp))
    {
        outcome.status = ExecStatus::OutputMismatch;
        outcome.stderr = with_marker(outcome.stderr, "output mismatch against expected stdout");
    } else {
        outcome.status = ExecStatus::Pass;
    }
    Ok(outcome)
}

/// Evaluates many candidates on `workers` threads; results keep input order.
pub fn evaluate_all(
    jobs: &[(String, TestHarness)],
    cfg: &HarnessConfig,
    workers: usize,
) -> Result<Vec<Result<ExecOutcome, HarnessError>>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::SandboxFailure(e.to_string()))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(cand, h)| evaluate_candidate(cand, h, cfg))
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsrReport {
    pub total: usize,
    pub passed: usize,
    pub esr: f64,
}

impl EsrReport {
    /// The rate rounded to four decimals.
    pub fn esr_display(&self) -> String {
        format!("{:.4}", self.esr)
    }
}

impl fmt::Display for EsrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} = {}", self.passed, self.total, self.esr_display())
    }
}

pub fn esr(statuses: &[ExecStatus]) -> Result<EsrReport, HarnessError> {
    if statuses.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let passed = statuses.iter().filter(|s| **s == ExecStatus::Pass).count();
    Ok(EsrReport {
        total: statuses.len(),
        passed,
        esr: passed as f64 / statuses.len() as f64,
    })
}

/// Key of one ESR breakdown cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BreakdownKey {
    pub dataset: String,
    pub opt_level: String,
    pub method: String,
}

pub fn esr_breakdown(
    items: &[(BreakdownKey, ExecStatus)],
) -> BTreeMap<BreakdownKey, EsrReport> {
    let mut groups: BTreeMap<BreakdownKey, Vec<ExecStatus>> = BTreeMap::new();
    for (k, s) in items {
        groups.entry(k.clone()).or_default().push(*s);
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let r = esr(&v).expect("groups are non-empty");
            (k, r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn esr_of_mixed_outcomes() {
        use ExecStatus::*;
        let r = esr(&[Pass, CompileFail, Pass, RunFail]).unwrap();
        assert_eq!(r.esr_display(), "0.5000");
        assert_eq!(esr(&[Pass, Pass]).unwrap().esr, 1.0);
        assert!(matches!(esr(&[]), Err(HarnessError::EmptyInput)));
    }

    #[test]
    fn status_names_round_trip() {
        for s in ExecStatus::ALL {
            assert_eq!(s.as_str().parse::<ExecStatus>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn temp_names_scrubbed() {
        let dir = std::path::Path::new("/tmp/ctxdecomp-eval-abc");
        let s = "/usr/bin/ld: /tmp/ctxdecomp-eval-abc/ccQ1w2E3.o: in function `main':";
        assert_eq!(scrub_paths(s, dir), "/usr/bin/ld: ccXXXXXX.o: in function `main':");
    }

    #[test]
    fn output_comparison_ignores_trailing_newlines() {
        assert!(same_output("1 2\n", "1 2"));
        assert!(!same_output("1 2 \n", "1 2"));
    }

    #[test]
    fn breakdown_groups() {
        let k = |m: &str| BreakdownKey {
            dataset: "d".into(),
            opt_level: "O0".into(),
            method: m.into(),
        };
        let b = esr_breakdown(&[
            (k("a"), ExecStatus::Pass),
            (k("b"), ExecStatus::RunFail),
            (k("a"), ExecStatus::CompileFail),
        ]);
        assert_eq!(b[&k("a")].passed, 1);
        assert_eq!(b[&k("a")].total, 2);
        assert_eq!(b[&k("b")].esr, 0.0);
    }
}
