//! CodeBLEU: token BLEU, keyword-weighted BLEU, syntax-tree match and
//! data-flow match, combined with renormalized weights.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::java::{is_keyword, parse_compilation_unit, parse_members, parse_statements, tokenize, Node, ParseResult};

use super::dataflow::{dataflow_match, normalized_dataflow};

/// Weight of Java keywords relative to other tokens in the weighted BLEU.
pub const KEYWORD_WEIGHT: f64 = 4.0;

const MAX_ORDER: usize = 4;
const SMOOTHING_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        Self {
            ngram: 0.25,
            weighted_ngram: 0.25,
            syntax: 0.25,
            dataflow: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuScore {
    pub ngram: f64,
    pub weighted_ngram: f64,
    /// `None` when the reference does not parse.
    pub syntax: Option<f64>,
    /// `None` when the reference does not parse or has no data flow.
    pub dataflow: Option<f64>,
    pub combined: f64,
    pub weights: CodeBleuWeights,
    pub reference_unparseable: bool,
}

pub fn code_tokens(src: &str) -> Vec<String> {
    tokenize(src).tokens.iter().map(|t| t.text.to_string()).collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_default() += 1;
        }
    }
    out
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Geometric mean of per-order ratios; zero numerators are replaced by
/// a small epsilon unless nothing matched at unigram level.
fn combine(ratios: &[(f64, f64)], hyp_len: usize, ref_len: usize) -> f64 {
    if ratios.first().is_none_or(|r| r.0 == 0.0) {
        return 0.0;
    }
    let log_sum: f64 = ratios
        .iter()
        .map(|&(num, den)| {
            let num = if num == 0.0 { SMOOTHING_EPSILON } else { num };
            (num / den).ln()
        })
        .sum();
    brevity_penalty(hyp_len, ref_len) * (log_sum / ratios.len() as f64).exp()
}

/// Sentence BLEU-4 with clipped precision.
pub fn bleu(hyp: &[String], reference: &[String]) -> f64 {
    let ratios: Vec<(f64, f64)> = (1..=MAX_ORDER)
        .map(|n| {
            let h = ngrams(hyp, n);
            let r = ngrams(reference, n);
            let clipped: usize = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
            let total: usize = h.values().sum();
            (clipped as f64, total.max(1) as f64)
        })
        .collect();
    combine(&ratios, hyp.len(), reference.len())
}

/// BLEU variant measured against the reference, with keyword unigrams
/// weighted by [`KEYWORD_WEIGHT`].
pub fn weighted_bleu(hyp: &[String], reference: &[String]) -> f64 {
    let weight = |t: &str| if is_keyword(t) { KEYWORD_WEIGHT } else { 1.0 };
    let ratios: Vec<(f64, f64)> = (1..=MAX_ORDER)
        .map(|n| {
            let h = ngrams(hyp, n);
            let r = ngrams(reference, n);
            let mut num = 0.0;
            let mut den = 0.0;
            for (g, c) in &r {
                let w = if n == 1 { weight(&g[0]) } else { 1.0 };
                num += w * (*c).min(h.get(g).copied().unwrap_or(0)) as f64;
                den += w * *c as f64;
            }
            (num, if den > 0.0 { den } else { 1.0 })
        })
        .collect();
    combine(&ratios, hyp.len(), reference.len())
}

fn best_parse(src: &str) -> ParseResult {
    let attempts = [parse_compilation_unit(src), parse_members(src), parse_statements(src)];
    let mut fallback: Option<ParseResult> = None;
    for r in attempts {
        if r.is_clean() {
            return r;
        }
        if fallback.as_ref().is_none_or(|f| r.errors.len() < f.errors.len()) {
            fallback = Some(r);
        }
    }
    fallback.expect("three attempts")
}

/// Parses a whole file, a member list or a statement list, whichever
/// succeeds first. `None` when none parses cleanly.
pub fn parse_snippet(src: &str) -> Option<Node> {
    let r = best_parse(src);
    r.is_clean().then_some(r.root)
}

fn subtrees(root: &Node) -> Vec<String> {
    let mut out = Vec::new();
    root.walk(&mut |n| {
        if !n.is_leaf() || std::ptr::eq(n, root) {
            out.push(n.sexp());
        }
    });
    out
}

/// Share of the reference's inner subtrees that also occur in the
/// hypothesis.
pub fn syntax_match(hyp: &Node, reference: &Node) -> f64 {
    let have: BTreeSet<String> = subtrees(hyp).into_iter().collect();
    let want = subtrees(reference);
    let hits = want.iter().filter(|s| have.contains(*s)).count();
    hits as f64 / want.len().max(1) as f64
}

pub fn codebleu(hypothesis: &str, reference: &str, weights: CodeBleuWeights) -> CodeBleuScore {
    let hyp = code_tokens(hypothesis);
    let refs = code_tokens(reference);
    let reference_tree = parse_snippet(reference);
    let reference_unparseable = reference_tree.is_none();

    if hyp.is_empty() {
        return CodeBleuScore {
            ngram: 0.0,
            weighted_ngram: 0.0,
            syntax: reference_tree.as_ref().map(|_| 0.0),
            dataflow: reference_tree
                .as_ref()
                .filter(|t| !normalized_dataflow(reference, t).is_empty())
                .map(|_| 0.0),
            combined: 0.0,
            weights,
            reference_unparseable,
        };
    }

    let ngram = bleu(&hyp, &refs);
    let weighted_ngram = weighted_bleu(&hyp, &refs);
    let (syntax, dataflow) = match &reference_tree {
        Some(rt) => {
            let ht = best_parse(hypothesis).root;
            let flow = dataflow_match(&normalized_dataflow(hypothesis, &ht), &normalized_dataflow(reference, rt));
            (Some(syntax_match(&ht, rt)), flow)
        }
        None => (None, None),
    };

    let parts = [
        (Some(ngram), weights.ngram),
        (Some(weighted_ngram), weights.weighted_ngram),
        (syntax, weights.syntax),
        (dataflow, weights.dataflow),
    ];
    let (sum, wsum) = parts
        .iter()
        .filter_map(|(v, w)| v.map(|v| (v * w, *w)))
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let combined = if wsum > 0.0 { (sum / wsum).clamp(0.0, 1.0) } else { 0.0 };
    CodeBleuScore {
        ngram,
        weighted_ngram,
        syntax,
        dataflow,
        combined,
        weights,
        reference_unparseable,
    }
}
