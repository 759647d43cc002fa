//! Per-report evaluation records and the per-system tables built from them.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::jindex::MethodId;

use super::codebleu::{codebleu, CodeBleuScore, CodeBleuWeights};
use super::{percent, LocalizationResult};

/// How a report with several fixed methods gets one CodeBLEU score.
pub const AGGREGATION_RULE: &str = "max over fixed methods";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixScore {
    pub against: MethodId,
    pub score: CodeBleuScore,
}

/// Scores `hypothesis` against each post-fix body and keeps the best;
/// ties go to the earlier method.
pub fn best_fix_score(hypothesis: &str, fixed: &[(MethodId, String)], weights: CodeBleuWeights) -> Option<FixScore> {
    let mut best: Option<FixScore> = None;
    for (id, body) in fixed {
        let score = codebleu(hypothesis, body, weights);
        if best.as_ref().is_none_or(|b| score.combined > b.score.combined) {
            best = Some(FixScore {
                against: id.clone(),
                score,
            });
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEval {
    pub localization: LocalizationResult,
    /// Present only for localized reports.
    pub fix: Option<FixScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEval {
    pub system: String,
    pub report_id: String,
    /// 1-based BM25 rank of the first ground-truth method.
    pub bm25_rank: Option<usize>,
    pub direct: Option<PipelineEval>,
    pub agentic: Option<PipelineEval>,
}

/// Mean of scores in [0,1] as a percentage per group, plus the pooled
/// mean. Empty groups report 0.
pub fn mean_codebleu(groups: &BTreeMap<String, Vec<f64>>) -> (BTreeMap<String, f64>, f64) {
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            100.0 * v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let per = groups.iter().map(|(k, v)| (k.clone(), mean(v))).collect();
    let all: Vec<f64> = groups.values().flatten().copied().collect();
    (per, mean(&all))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub system: String,
    pub reports: usize,
    /// BM25 Top-N recall per N, ascending.
    pub top_n: Vec<(usize, f64)>,
    /// `None` when the pipeline produced no outputs in this run.
    pub direct: Option<f64>,
    pub agentic: Option<f64>,
}

impl LocalizationRow {
    pub fn top(&self, n: usize) -> Option<f64> {
        self.top_n.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuRow {
    pub system: String,
    pub direct_localized: usize,
    pub direct: Option<f64>,
    pub agentic_localized: usize,
    pub agentic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Per-system rows followed by the pooled `Overall` row.
    pub localization: Vec<LocalizationRow>,
    pub codebleu: Vec<CodeBleuRow>,
    pub aggregation: String,
}

pub const OVERALL: &str = "Overall";

type Pick = fn(&ReportEval) -> Option<&PipelineEval>;

fn localization_row(system: &str, recs: &[&ReportEval], ns: &[usize]) -> LocalizationRow {
    let top = |n: usize| percent(recs.iter().filter(|r| r.bm25_rank.is_some_and(|k| k <= n)).count(), recs.len());
    let acc = |pick: Pick| {
        let evals: Vec<_> = recs.iter().filter_map(|r| pick(r)).collect();
        (!evals.is_empty()).then(|| percent(evals.iter().filter(|e| e.localization.matched).count(), evals.len()))
    };
    LocalizationRow {
        system: system.to_string(),
        reports: recs.len(),
        top_n: ns.iter().map(|&n| (n, top(n))).collect(),
        direct: acc(|r| r.direct.as_ref()),
        agentic: acc(|r| r.agentic.as_ref()),
    }
}

fn localized_scores(recs: &[&ReportEval], pick: Pick) -> Vec<f64> {
    recs.iter()
        .filter_map(|r| pick(r))
        .filter(|e| e.localization.matched)
        .filter_map(|e| e.fix.as_ref().map(|f| f.score.combined))
        .collect()
}

/// Per-system rows plus the pooled row. A pipeline with no outputs in any
/// record is left uncomputed in both tables. `ns` is sorted and deduplicated.
pub fn summarize(records: &[ReportEval], ns: &[usize]) -> EvalSummary {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut by_system: BTreeMap<&str, Vec<&ReportEval>> = BTreeMap::new();
    for r in records {
        by_system.entry(&r.system).or_default().push(r);
    }
    let all: Vec<&ReportEval> = records.iter().collect();

    let mut localization: Vec<LocalizationRow> = by_system.iter().map(|(s, recs)| localization_row(s, recs, &ns)).collect();
    localization.push(localization_row(OVERALL, &all, &ns));
    let has_direct = records.iter().any(|r| r.direct.is_some());
    let has_agentic = records.iter().any(|r| r.agentic.is_some());

    let mut direct = BTreeMap::new();
    let mut agentic = BTreeMap::new();
    for (s, recs) in &by_system {
        direct.insert(s.to_string(), localized_scores(recs, |r| r.direct.as_ref()));
        agentic.insert(s.to_string(), localized_scores(recs, |r| r.agentic.as_ref()));
    }
    let (dm, d_all) = mean_codebleu(&direct);
    let (am, a_all) = mean_codebleu(&agentic);
    let mut codebleu: Vec<CodeBleuRow> = by_system
        .keys()
        .map(|s| CodeBleuRow {
            system: s.to_string(),
            direct_localized: direct[*s].len(),
            direct: has_direct.then(|| dm[*s]),
            agentic_localized: agentic[*s].len(),
            agentic: has_agentic.then(|| am[*s]),
        })
        .collect();
    codebleu.push(CodeBleuRow {
        system: OVERALL.to_string(),
        direct_localized: direct.values().map(Vec::len).sum(),
        direct: has_direct.then_some(d_all),
        agentic_localized: agentic.values().map(Vec::len).sum(),
        agentic: has_agentic.then_some(a_all),
    });
    EvalSummary {
        localization,
        codebleu,
        aggregation: AGGREGATION_RULE.to_string(),
    }
}

/// Cell text for a value that may not have been computed.
pub const NOT_COMPUTED: &str = "not computed";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NOT_COMPUTED.to_string(), |v| format!("{v:.2}"))
}

impl EvalSummary {
    pub fn localization_csv(&self) -> String {
        let mut out = String::from("system,reports");
        for (n, _) in self.localization.first().map_or(&[][..], |r| &r.top_n[..]) {
            let _ = write!(out, ",bm25_top{n}");
        }
        out.push_str(",direct,agentic\n");
        for r in &self.localization {
            let _ = write!(out, "{},{}", r.system, r.reports);
            for (_, v) in &r.top_n {
                let _ = write!(out, ",{v:.2}");
            }
            let _ = writeln!(out, ",{},{}", opt(r.direct), opt(r.agentic));
        }
        out
    }

    pub fn codebleu_csv(&self) -> String {
        let mut out = String::from("system,direct_localized,direct_codebleu,agentic_localized,agentic_codebleu\n");
        for r in &self.codebleu {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.system,
                r.direct_localized,
                opt(r.direct),
                r.agentic_localized,
                opt(r.agentic)
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("## Localization accuracy (%)\n\n");
        let ns: Vec<usize> = self.localization.first().map_or(Vec::new(), |r| r.top_n.iter().map(|p| p.0).collect());
        out.push_str("| System | Reports |");
        for n in &ns {
            let _ = write!(out, " BM25 Top-{n} |");
        }
        out.push_str(" Direct | Agentic |\n|---|---:|");
        out.push_str(&"---:|".repeat(ns.len() + 2));
        out.push('\n');
        for r in &self.localization {
            let name = if r.system == OVERALL {
                format!("**{}**", r.system)
            } else {
                r.system.clone()
            };
            let _ = write!(out, "| {name} | {} |", r.reports);
            for (_, v) in &r.top_n {
                let _ = write!(out, " {v:.2} |");
            }
            let _ = writeln!(out, " {} | {} |", opt(r.direct), opt(r.agentic));
        }
        out.push_str("\n## Fix similarity, mean CodeBLEU over localized reports (%)\n\n");
        out.push_str("| System | Direct | Agentic |\n|---|---:|---:|\n");
        for r in &self.codebleu {
            let name = if r.system == OVERALL {
                format!("**{}**", r.system)
            } else {
                r.system.clone()
            };
            let cell = |v: Option<f64>, n: usize| match v {
                Some(v) => format!("{v:.2} ({n})"),
                None => NOT_COMPUTED.to_string(),
            };
            let _ = writeln!(
                out,
                "| {name} | {} | {} |",
                cell(r.direct, r.direct_localized),
                cell(r.agentic, r.agentic_localized)
            );
        }
        let _ = write!(out, "\nPer-report score: {}.\n", self.aggregation);
        out
    }
}
