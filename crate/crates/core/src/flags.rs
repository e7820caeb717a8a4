//! Finding which optimization flags actually change the code generated for
//! a sample.
//!
//! A set of flags S is tested by compiling the sample twice at a fixed base
//! level, once with every flag in S enabled (`-fX`) and once with every flag
//! disabled (`-fno-X`), and comparing the normalized token sequences.
//! Bisection tests the whole candidate list first, then its groups (or
//! halves), and only descends into sets that showed a difference. This
//! assumes that flags within a set never cancel each other's effects
//! exactly; exhaustive mode tests every flag on its own instead.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asmnorm::{asm_tokens, normalize_asm_text};
use crate::harness::{sandbox, PRELUDE};

const BUILTIN_FLAGS: &str = include_str!("../data/gcc_flags.txt");

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FlagsError {
    #[error("compiler {0} not found")]
    CompilerMissing(String),
    #[error("compilation failed: {0}")]
    CompileFailed(String),
    #[error("flag list line {line}: {message}")]
    BadFlagList { line: usize, message: String },
    #[error("empty flag list")]
    EmptyFlagList,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCandidate {
    pub name: String,
    pub group: Option<String>,
}

/// Parses `<flag> [group]` lines; `#` starts a comment.
pub fn parse_flag_list(text: &str) -> Result<Vec<FlagCandidate>, FlagsError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().expect("non-empty line").to_string();
        let group = parts.next().map(String::from);
        let bad = |message: String| FlagsError::BadFlagList { line: i + 1, message };
        if parts.next().is_some() {
            return Err(bad("expected `<flag> [group]`".into()));
        }
        if !name.starts_with("-f") || name.starts_with("-fno-") || name.contains('=') {
            return Err(bad(format!("{name} is not a toggleable -f flag")));
        }
        if out.iter().any(|f: &FlagCandidate| f.name == name) {
            return Err(bad(format!("duplicate flag {name}")));
        }
        out.push(FlagCandidate { name, group });
    }
    Ok(out)
}

pub fn load_flag_list(path: &Path) -> Result<Vec<FlagCandidate>, FlagsError> {
    let text = std::fs::read_to_string(path).map_err(|e| FlagsError::BadFlagList {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_flag_list(&text)
}

/// The optimization flags the pinned host compiler enables at -O1..-O3,
/// grouped by the lowest level that enables them.
pub fn builtin_flag_list() -> Vec<FlagCandidate> {
    parse_flag_list(BUILTIN_FLAGS).expect("shipped flag list is valid")
}

pub fn negate(flag: &str) -> String {
    format!("-fno-{}", flag.trim_start_matches("-f"))
}

/// Compiles C source to assembly and returns normalized tokens.
pub trait AsmCompiler: Send + Sync {
    fn id(&self) -> String;
    /// `toggles` are (flag, enabled) pairs applied after `base_flags`.
    fn compile(&self, source: &str, base_flags: &[String], toggles: &[(&str, bool)]) -> Result<Vec<String>, FlagsError>;
}

/// gcc (or a compatible driver) emitting assembly to stdout.
#[derive(Debug, Clone)]
pub struct GccCompiler {
    pub program: String,
    pub timeout: Duration,
}

impl GccCompiler {
    pub fn new(program: &str) -> Self {
        GccCompiler {
            program: program.to_string(),
            timeout: Duration::from_secs(30),
        }
    }

    /// The raw listing for one configuration.
    pub fn listing(&self, source: &str, args: &[String]) -> Result<String, FlagsError> {
        let dir = tempfile::tempdir().map_err(|e| FlagsError::CompileFailed(e.to_string()))?;
        // A fixed file name keeps `.file` directives identical across runs.
        std::fs::write(dir.path().join("sample.c"), format!("{PRELUDE}{source}"))
            .map_err(|e| FlagsError::CompileFailed(e.to_string()))?;
        let mut cmd = Command::new(&self.program);
        cmd.current_dir(dir.path())
            .env("LC_ALL", "C")
            .args(args)
            .args(["-fdiagnostics-color=never", "-S", "-o", "-", "sample.c"]);
        let limits = sandbox::Limits {
            wall: self.timeout,
            address_space: 0,
            cpu_secs: 0,
            file_size: 0,
            isolate_network: false,
        };
        let done = sandbox::run(cmd, limits, 64 << 20).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                FlagsError::CompilerMissing(self.program.clone())
            } else {
                FlagsError::CompileFailed(e.to_string())
            }
        })?;
        if done.timed_out {
            return Err(FlagsError::CompileFailed("compiler timed out".into()));
        }
        if !done.success() {
            return Err(FlagsError::CompileFailed(done.stderr.trim().to_string()));
        }
        Ok(done.stdout)
    }
}

impl AsmCompiler for GccCompiler {
    fn id(&self) -> String {
        let v = Command::new(&self.program).arg("-dumpfullversion").output();
        match v {
            Ok(o) if o.status.success() => format!("{}-{}", self.program, String::from_utf8_lossy(&o.stdout).trim()),
            _ => self.program.clone(),
        }
    }

    fn compile(&self, source: &str, base_flags: &[String], toggles: &[(&str, bool)]) -> Result<Vec<String>, FlagsError> {
        let mut args = base_flags.to_vec();
        for (flag, on) in toggles {
            args.push(if *on { flag.to_string() } else { negate(flag) });
        }
        let listing = self.listing(source, &args)?;
        let norm = normalize_asm_text(&listing).map_err(|e| FlagsError::CompileFailed(format!("unusable listing: {e}")))?;
        Ok(asm_tokens(&norm.body))
    }
}

/// Where two token sequences first differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub index: usize,
    pub enabled_window: String,
    pub disabled_window: String,
}

pub fn first_difference(a: &[String], b: &[String]) -> Option<Evidence> {
    let index = a.iter().zip(b).position(|(x, y)| x != y).or_else(|| {
        if a.len() != b.len() {
            Some(a.len().min(b.len()))
        } else {
            None
        }
    })?;
    let window = |t: &[String]| {
        let lo = index.saturating_sub(3).min(t.len());
        let hi = (index + 4).min(t.len());
        t[lo..hi].join(" ")
    };
    Some(Evidence {
        index,
        enabled_window: window(a),
        disabled_window: window(b),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Active { evidence: Evidence },
    Inactive,
    Undecidable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationResult {
    pub flag: String,
    pub sample_id: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl ActivationResult {
    pub fn active(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Active { .. } => Some(true),
            Verdict::Inactive => Some(false),
            Verdict::Undecidable { .. } => None,
        }
    }
}

/// One sample's compilation context, with compile results memoized by
/// configuration.
pub struct Probe<'a> {
    pub compiler: &'a dyn AsmCompiler,
    pub source: &'a str,
    pub base_flags: Vec<String>,
    cache: Mutex<HashMap<Vec<(String, bool)>, Result<Vec<String>, FlagsError>>>,
    compiles: Mutex<usize>,
}

impl<'a> Probe<'a> {
    pub fn new(compiler: &'a dyn AsmCompiler, source: &'a str, base_flags: Vec<String>) -> Self {
        Probe {
            compiler,
            source,
            base_flags,
            cache: Mutex::new(HashMap::new()),
            compiles: Mutex::new(0),
        }
    }

    /// Compiler invocations so far.
    pub fn compiles(&self) -> usize {
        *self.compiles.lock().expect("probe lock")
    }

    pub fn compile_to_asm(&self, toggles: &[(&str, bool)]) -> Result<Vec<String>, FlagsError> {
        let key: Vec<(String, bool)> = toggles.iter().map(|(f, on)| (f.to_string(), *on)).collect();
        if let Some(hit) = self.cache.lock().expect("probe lock").get(&key) {
            return hit.clone();
        }
        *self.compiles.lock().expect("probe lock") += 1;
        let r = self.compiler.compile(self.source, &self.base_flags, toggles);
        self.cache.lock().expect("probe lock").insert(key, r.clone());
        r
    }

    /// Compares all-enabled against all-disabled for `flags`.
    pub fn test_set(&self, flags: &[&str]) -> Result<Option<Evidence>, FlagsError> {
        let on: Vec<(&str, bool)> = flags.iter().map(|f| (*f, true)).collect();
        let off: Vec<(&str, bool)> = flags.iter().map(|f| (*f, false)).collect();
        let a = self.compile_to_asm(&on)?;
        let b = self.compile_to_asm(&off)?;
        Ok(first_difference(&a, &b))
    }

    pub fn is_active(&self, flag: &str) -> Verdict {
        match self.test_set(&[flag]) {
            Ok(Some(evidence)) => Verdict::Active { evidence },
            Ok(None) => Verdict::Inactive,
            Err(e) => Verdict::Undecidable { reason: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BisectOutcome {
    pub verdicts: Vec<(String, Verdict)>,
    pub set_tests: usize,
    pub compiles: usize,
}

impl BisectOutcome {
    pub fn active_flags(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| matches!(v, Verdict::Active { .. }))
            .map(|(f, _)| f.as_str())
            .collect()
    }
}

fn split<'f>(flags: &[&'f FlagCandidate]) -> Vec<Vec<&'f FlagCandidate>> {
    let mut groups: BTreeMap<Option<&str>, Vec<&FlagCandidate>> = BTreeMap::new();
    for f in flags {
        groups.entry(f.group.as_deref()).or_default().push(f);
    }
    if groups.len() > 1 {
        // Keep list order between groups.
        let mut ordered: Vec<Vec<&FlagCandidate>> = groups.into_values().collect();
        ordered.sort_by_key(|g| flags.iter().position(|f| f.name == g[0].name));
        return ordered;
    }
    let mid = flags.len() / 2;
    vec![flags[..mid].to_vec(), flags[mid..].to_vec()]
}

/// Finds the flags individually active on the probe's sample.
pub fn bisect_groups(flags: &[FlagCandidate], probe: &Probe<'_>) -> Result<BisectOutcome, FlagsError> {
    if flags.is_empty() {
        return Err(FlagsError::EmptyFlagList);
    }
    let mut verdicts: BTreeMap<&str, Verdict> = BTreeMap::new();
    let mut set_tests = 0;
    let mut stack: Vec<Vec<&FlagCandidate>> = vec![flags.iter().collect()];
    while let Some(set) = stack.pop() {
        if set.len() == 1 {
            set_tests += 1;
            verdicts.insert(&set[0].name, probe.is_active(&set[0].name));
            continue;
        }
        set_tests += 1;
        let names: Vec<&str> = set.iter().map(|f| f.name.as_str()).collect();
        match probe.test_set(&names) {
            Ok(None) => {
                for f in &set {
                    verdicts.insert(&f.name, Verdict::Inactive);
                }
            }
            // A difference, or a failing combination: look closer.
            Ok(Some(_)) | Err(_) => {
                let mut parts = split(&set);
                parts.reverse();
                stack.extend(parts);
            }
        }
    }
    Ok(BisectOutcome {
        verdicts: flags
            .iter()
            .map(|f| (f.name.clone(), verdicts.remove(f.name.as_str()).expect("every flag decided")))
            .collect(),
        set_tests,
        compiles: probe.compiles(),
    })
}

/// Tests every flag on its own.
pub fn exhaustive(flags: &[FlagCandidate], probe: &Probe<'_>) -> BisectOutcome {
    BisectOutcome {
        verdicts: flags.iter().map(|f| (f.name.clone(), probe.is_active(&f.name))).collect(),
        set_tests: flags.len(),
        compiles: probe.compiles(),
    }
}

impl BisectOutcome {
    /// Per-flag results tagged with `sample_id`.
    pub fn results(&self, sample_id: &str) -> Vec<ActivationResult> {
        self.verdicts
            .iter()
            .map(|(flag, verdict)| ActivationResult {
                flag: flag.clone(),
                sample_id: sample_id.to_string(),
                verdict: verdict.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagFrequency {
    pub flag: String,
    pub active: usize,
    pub decidable: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationReport {
    /// Sorted by frequency descending, then flag name.
    pub ranked: Vec<FlagFrequency>,
    /// Flags without any decidable sample.
    pub no_decidable_samples: Vec<String>,
}

pub fn rank_flags(results: &[ActivationResult]) -> ActivationReport {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in results {
        let e = tally.entry(&r.flag).or_default();
        match r.active() {
            Some(true) => {
                e.0 += 1;
                e.1 += 1;
            }
            Some(false) => e.1 += 1,
            None => {}
        }
    }
    let mut ranked = Vec::new();
    let mut no_decidable_samples = Vec::new();
    for (flag, (active, decidable)) in tally {
        if decidable == 0 {
            no_decidable_samples.push(flag.to_string());
        } else {
            ranked.push(FlagFrequency {
                flag: flag.to_string(),
                active,
                decidable,
                frequency: active as f64 / decidable as f64,
            });
        }
    }
    ranked.sort_by(|a, b| b.frequency.total_cmp(&a.frequency).then_with(|| a.flag.cmp(&b.flag)));
    ActivationReport {
        ranked,
        no_decidable_samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Output depends on a fixed set of "real" flags: each one, when
    /// disabled, appends its own token.
    struct Planted {
        active: Vec<&'static str>,
        broken: Option<&'static str>,
    }

    impl AsmCompiler for Planted {
        fn id(&self) -> String {
            "planted".into()
        }

        fn compile(&self, _: &str, _: &[String], toggles: &[(&str, bool)]) -> Result<Vec<String>, FlagsError> {
            let mut toks = vec!["ret".to_string()];
            for (f, on) in toggles {
                if Some(*f) == self.broken && !on {
                    return Err(FlagsError::CompileFailed("internal compiler error".into()));
                }
                if self.active.contains(f) && !on {
                    toks.push(f.to_string());
                }
            }
            Ok(toks)
        }
    }

    fn cands(groups: &[(&str, Option<&str>)]) -> Vec<FlagCandidate> {
        groups
            .iter()
            .map(|(n, g)| FlagCandidate {
                name: n.to_string(),
                group: g.map(String::from),
            })
            .collect()
    }

    fn eight() -> Vec<FlagCandidate> {
        cands(&[
            ("-fa", Some("x")),
            ("-fb", Some("x")),
            ("-fc", Some("x")),
            ("-fd", Some("x")),
            ("-fe", Some("y")),
            ("-ff", Some("y")),
            ("-fg", Some("y")),
            ("-fh", Some("y")),
        ])
    }

    #[test]
    fn planted_pair_found() {
        // Clustered: whole list, both groups, both halves of x, then -fa and
        // -fb alone. 7 set tests, 14 compiles.
        let c = Planted {
            active: vec!["-fa", "-fb"],
            broken: None,
        };
        let probe = Probe::new(&c, "", vec!["-O1".into()]);
        let out = bisect_groups(&eight(), &probe).unwrap();
        assert_eq!(out.active_flags(), vec!["-fa", "-fb"]);
        assert_eq!(out.compiles, 14);
        let oracle = exhaustive(&eight(), &Probe::new(&c, "", vec![]));
        assert_eq!(oracle.compiles, 16);
        assert_eq!(oracle.active_flags(), out.active_flags());

        let scattered = Planted {
            active: vec!["-fc", "-fh"],
            broken: None,
        };
        let out = bisect_groups(&eight(), &Probe::new(&scattered, "", vec![])).unwrap();
        assert_eq!(out.active_flags(), vec!["-fc", "-fh"]);
    }

    #[test]
    fn nothing_active_is_one_test() {
        let c = Planted {
            active: vec![],
            broken: None,
        };
        let probe = Probe::new(&c, "", vec![]);
        let out = bisect_groups(&eight(), &probe).unwrap();
        assert!(out.active_flags().is_empty());
        assert_eq!(out.set_tests, 1);
        assert_eq!(out.compiles, 2);
    }

    #[test]
    fn single_flag_is_is_active() {
        let c = Planted {
            active: vec!["-fa"],
            broken: None,
        };
        let probe = Probe::new(&c, "", vec![]);
        let out = bisect_groups(&cands(&[("-fa", None)]), &probe).unwrap();
        match &out.verdicts[0].1 {
            Verdict::Active { evidence } => assert_eq!(evidence.index, 1),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn compile_failure_is_undecidable() {
        let c = Planted {
            active: vec!["-fa"],
            broken: Some("-fd"),
        };
        let probe = Probe::new(&c, "", vec![]);
        let out = bisect_groups(&eight(), &probe).unwrap();
        let v: BTreeMap<_, _> = out.verdicts.iter().cloned().collect();
        assert!(matches!(v["-fd"], Verdict::Undecidable { .. }));
        assert!(matches!(v["-fa"], Verdict::Active { .. }));
        assert_eq!(v["-fb"], Verdict::Inactive);
    }

    #[test]
    fn evidence_index() {
        let a: Vec<String> = "a b c d".split(' ').map(String::from).collect();
        let b: Vec<String> = "a b x d".split(' ').map(String::from).collect();
        assert_eq!(first_difference(&a, &b).unwrap().index, 2);
        assert_eq!(first_difference(&a, &a), None);
        assert_eq!(first_difference(&a, &a[..3]).unwrap().index, 3);
    }

    #[test]
    fn ranking() {
        let r = |flag: &str, s: &str, v: Verdict| ActivationResult {
            flag: flag.into(),
            sample_id: s.into(),
            verdict: v,
        };
        let ev = || Verdict::Active {
            evidence: Evidence {
                index: 0,
                enabled_window: String::new(),
                disabled_window: String::new(),
            },
        };
        let results = vec![
            r("-fb", "1", ev()),
            r("-fb", "2", ev()),
            r("-fb", "3", ev()),
            r("-fb", "4", Verdict::Inactive),
            r("-fb", "5", Verdict::Undecidable { reason: "x".into() }),
            r("-fa", "1", ev()),
            r("-fa", "2", Verdict::Inactive),
            r("-fc", "1", Verdict::Inactive),
            r("-fc", "2", ev()),
            r("-fz", "1", Verdict::Undecidable { reason: "x".into() }),
        ];
        let rep = rank_flags(&results);
        assert_eq!(rep.ranked[0].flag, "-fb");
        assert_eq!(rep.ranked[0].frequency, 0.75);
        assert_eq!(rep.ranked[1].flag, "-fa");
        assert_eq!(rep.ranked[2].flag, "-fc");
        assert_eq!(rep.no_decidable_samples, vec!["-fz"]);
    }

    #[test]
    fn flag_list_format() {
        let l = parse_flag_list("# c\n-fa g1\n\n-fb  # trailing\n").unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l[0].group.as_deref(), Some("g1"));
        assert_eq!(l[1].group, None);
        assert!(parse_flag_list("-fa\n-fa").is_err());
        assert!(parse_flag_list("-O2").is_err());
        assert!(builtin_flag_list().iter().any(|f| f.name == "-fomit-frame-pointer"));
    }
}
