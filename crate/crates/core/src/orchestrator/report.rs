//! Reports computed from result records.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use super::{DecompResult, Mode, OrchestratorError};
use crate::corpus::StructuralMetrics;
use crate::harness::{self, BreakdownKey, EsrReport, ExecStatus};
use crate::triage::{self, ErrorCategory, OutcomeLabel, TransitionMatrix};

/// Lower edges of the cyclomatic complexity bins; the last is open-ended.
pub const CYCLOMATIC_EDGES: [usize; 5] = [1, 2, 4, 8, 16];
/// Lower edges of the lines-of-code bins; the last is open-ended.
pub const LOC_EDGES: [usize; 5] = [1, 10, 20, 40, 80];
/// Bins with fewer samples are flagged.
pub const MIN_BIN_SAMPLES: usize = 3;

pub fn esr_by_key(records: &[DecompResult]) -> BTreeMap<BreakdownKey, EsrReport> {
    let items: Vec<(BreakdownKey, ExecStatus)> = records.iter().map(|r| (r.breakdown_key(), r.effective_status())).collect();
    harness::esr_breakdown(&items)
}

pub fn render_esr(table: &BTreeMap<BreakdownKey, EsrReport>) -> String {
    let mut out = String::from("dataset\topt\tmethod\tpassed\ttotal\tesr\n");
    for (k, r) in table {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", k.dataset, k.opt_level, k.method, r.passed, r.total, r.esr_display());
    }
    out
}

/// Failure category frequencies per group, where a group is
/// `dataset/opt_level/mode`.
pub fn error_distribution(
    records: &[DecompResult],
) -> Result<BTreeMap<String, BTreeMap<ErrorCategory, f64>>, OrchestratorError> {
    let failures: Vec<(String, ErrorCategory)> = records
        .iter()
        .filter(|r| !r.passed())
        .map(|r| {
            let k = r.breakdown_key();
            (format!("{}/{}/{}", k.dataset, k.opt_level, k.method), r.category.unwrap_or(ErrorCategory::Other))
        })
        .collect();
    Ok(triage::distribution(&failures, &[])?)
}

pub fn render_distribution(dist: &BTreeMap<String, BTreeMap<ErrorCategory, f64>>) -> String {
    let mut out = String::from("group");
    for c in ErrorCategory::ALL {
        let _ = write!(out, "\t{}", c.label());
    }
    out.push('\n');
    for (g, freqs) in dist {
        out.push_str(g);
        for c in ErrorCategory::ALL {
            let _ = write!(out, "\t{:.4}", freqs.get(&c).copied().unwrap_or(0.0));
        }
        out.push('\n');
    }
    out
}

/// Outcome transitions between two runs over the same samples.
pub fn transition_matrix(a: &[DecompResult], b: &[DecompResult]) -> Result<TransitionMatrix, OrchestratorError> {
    let labels = |rs: &[DecompResult]| -> BTreeMap<String, OutcomeLabel> {
        rs.iter().map(|r| (r.sample_id.clone(), r.outcome_label())).collect()
    };
    Ok(triage::transitions(&labels(a), &labels(b))?)
}

pub fn render_transitions(m: &TransitionMatrix) -> String {
    let mut out = String::from("from\\to");
    for l in OutcomeLabel::ALL {
        let _ = write!(out, "\t{}", l.label());
    }
    out.push('\n');
    for from in OutcomeLabel::ALL {
        out.push_str(from.label());
        for to in OutcomeLabel::ALL {
            let _ = write!(out, "\t{}", m.get(from, to));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Cyclomatic,
    Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumBin {
    pub stratum: Stratum,
    pub lower: usize,
    /// Exclusive; `None` for the open-ended last bin.
    pub upper: Option<usize>,
    pub mode: Mode,
    pub total: usize,
    pub passed: usize,
    pub esr: Option<f64>,
    pub low_confidence: bool,
}

impl StratumBin {
    pub fn range(&self) -> String {
        match self.upper {
            Some(u) => format!("[{},{})", self.lower, u),
            None => format!("[{},inf)", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedReport {
    pub bins: Vec<StratumBin>,
    /// Samples without computable metrics.
    pub missing_metrics: Vec<String>,
}

/// Index of the bin containing `v`; values below the first edge go in the
/// first bin.
pub fn bin_of(edges: &[usize], v: usize) -> usize {
    edges.iter().rposition(|e| v >= *e).unwrap_or(0)
}

/// ESR per complexity and length bin, per mode.
pub fn stratified_report(records: &[DecompResult], metrics: &HashMap<String, StructuralMetrics>) -> StratifiedReport {
    let mut missing: Vec<String> = Vec::new();
    // (stratum, bin, mode) -> (total, passed)
    let mut cells: BTreeMap<(Stratum, usize, Mode), (usize, usize)> = BTreeMap::new();
    let mut modes: Vec<Mode> = records.iter().map(|r| r.mode).collect();
    modes.sort();
    modes.dedup();
    for r in records {
        let Some(m) = metrics.get(&r.sample_id) else {
            missing.push(r.sample_id.clone());
            continue;
        };
        for (stratum, edges, v) in [
            (Stratum::Cyclomatic, &CYCLOMATIC_EDGES, m.cyclomatic),
            (Stratum::Loc, &LOC_EDGES, m.loc),
        ] {
            let cell = cells.entry((stratum, bin_of(edges, v), r.mode)).or_default();
            cell.0 += 1;
            cell.1 += usize::from(r.passed());
        }
    }
    missing.sort();
    missing.dedup();
    let mut bins = Vec::new();
    for (stratum, edges) in [(Stratum::Cyclomatic, &CYCLOMATIC_EDGES), (Stratum::Loc, &LOC_EDGES)] {
        for (i, lower) in edges.iter().enumerate() {
            for mode in &modes {
                let (total, passed) = cells.get(&(stratum, i, *mode)).copied().unwrap_or((0, 0));
                bins.push(StratumBin {
                    stratum,
                    lower: *lower,
                    upper: edges.get(i + 1).copied(),
                    mode: *mode,
                    total,
                    passed,
                    esr: (total > 0).then(|| passed as f64 / total as f64),
                    low_confidence: total < MIN_BIN_SAMPLES,
                });
            }
        }
    }
    StratifiedReport {
        bins,
        missing_metrics: missing,
    }
}

pub fn render_strata(r: &StratifiedReport) -> String {
    let mut out = String::from("stratum\tbin\tmode\tpassed\ttotal\tesr\tnote\n");
    for b in &r.bins {
        let stratum = match b.stratum {
            Stratum::Cyclomatic => "cyclomatic",
            Stratum::Loc => "loc",
        };
        let esr = b.esr.map_or("-".to_string(), |e| format!("{e:.4}"));
        let note = if b.low_confidence { "low-confidence" } else { "" };
        let _ = writeln!(out, "{stratum}\t{}\t{}\t{}\t{}\t{esr}\t{note}", b.range(), b.mode, b.passed, b.total);
    }
    if !r.missing_metrics.is_empty() {
        let _ = writeln!(out, "missing metrics: {}", r.missing_metrics.join(", "));
    }
    out
}
