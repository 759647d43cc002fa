//! Scoring: localization accuracy, the BM25 baseline, CodeBLEU and the
//! field-presence audit.

mod audit;
mod bm25;
mod codebleu;
mod dataflow;
mod summary;

pub use audit::{audit_fields, completeness, AuditInput, Completeness, FieldPresence, LocationLevel, RepairLevel};
pub use bm25::{bm25_rank, split_identifier, tokenize, topn_recall, Bm25Index, Bm25Params, RankedList};
pub use codebleu::{
    bleu, code_tokens, codebleu, parse_snippet, syntax_match, weighted_bleu, CodeBleuScore, CodeBleuWeights,
    KEYWORD_WEIGHT,
};
pub use dataflow::{dataflow_match, normalized_dataflow, FlowItem, Relation};
pub use summary::{
    best_fix_score, mean_codebleu, summarize, CodeBleuRow, EvalSummary, FixScore, LocalizationRow, NOT_COMPUTED, PipelineEval,
    ReportEval, AGGREGATION_RULE, OVERALL,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::enhance::normalize_location;
use crate::jindex::{normalize_class, MethodId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to score")]
    Empty,
    #[error("invalid BM25 parameters k1={k1} b={b}")]
    Bm25Params { k1: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub report_id: String,
    pub predicted: Vec<String>,
    pub ground_truth: BTreeSet<MethodId>,
    pub matched: bool,
    pub matched_on: Option<MethodId>,
    /// Predictions that did not parse as a location.
    pub skipped: usize,
    /// Other ground-truth overloads sharing the matched location.
    pub overload_collisions: usize,
}

/// Class and method with anonymous-class suffixes removed.
pub fn location_key(class_fqn: &str, method_name: &str) -> (String, String) {
    (normalize_class(class_fqn).to_string(), method_name.to_string())
}

fn prediction_key(pred: &str) -> Option<(String, String)> {
    let loc = normalize_location(pred)?;
    let (c, m) = loc.split_once('#')?;
    Some(location_key(c, m))
}

/// The first prediction naming a ground-truth method decides the match.
pub fn match_localization(report_id: &str, pred: &[String], gt: &BTreeSet<MethodId>) -> LocalizationResult {
    let mut skipped = 0;
    let mut hit = None;
    for p in pred {
        let Some(key) = prediction_key(p) else {
            skipped += 1;
            continue;
        };
        let same: Vec<&MethodId> = gt
            .iter()
            .filter(|id| location_key(&id.class_fqn, &id.method_name) == key)
            .collect();
        if let Some(first) = same.first() {
            hit = Some(((*first).clone(), same.len() - 1));
            break;
        }
    }
    LocalizationResult {
        report_id: report_id.to_string(),
        predicted: pred.to_vec(),
        ground_truth: gt.clone(),
        matched: hit.is_some(),
        overload_collisions: hit.as_ref().map_or(0, |h| h.1),
        matched_on: hit.map(|h| h.0),
        skipped,
    }
}

/// Percentage of matched results.
pub fn accuracy(results: &[LocalizationResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = results.iter().filter(|r| r.matched).count();
    Ok(percent(hits, results.len()))
}

pub(crate) fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}
