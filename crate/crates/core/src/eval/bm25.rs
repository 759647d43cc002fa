//! Okapi BM25 over method documents.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::jindex::{MethodId, MethodNode};

use super::{location_key, percent, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Splits `parseHTTPRequest2` into `parse`, `HTTP`, `Request2`.
pub fn split_identifier(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (pos, c) = chars[i];
        let prev = chars[i - 1].1;
        let next_lower = chars.get(i + 1).is_some_and(|(_, n)| n.is_lowercase());
        let boundary = c.is_uppercase()
            && (prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower));
        if boundary {
            parts.push(&word[start..pos]);
            start = pos;
        }
    }
    parts.push(&word[start..]);
    parts
}

/// Lowercased alphanumeric runs, identifiers split on case changes and
/// underscores.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .flat_map(split_identifier)
        .map(str::to_lowercase)
        .collect()
}

fn document_tokens(node: &MethodNode) -> Vec<String> {
    let mut t = tokenize(&node.id.class_fqn);
    t.extend(tokenize(&node.id.method_name));
    t.extend(tokenize(&node.body_text));
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_report_id: String,
    /// Descending score; ties in id order.
    pub ranked: Vec<(MethodId, f64)>,
}

impl RankedList {
    /// 1-based position of the first entry whose location is in `gt`.
    pub fn first_hit(&self, gt: &BTreeSet<MethodId>) -> Option<usize> {
        let keys: BTreeSet<_> = gt.iter().map(|g| location_key(&g.class_fqn, &g.method_name)).collect();
        self.ranked
            .iter()
            .position(|(id, _)| keys.contains(&location_key(&id.class_fqn, &id.method_name)))
            .map(|p| p + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    ids: Vec<MethodId>,
    tf: Vec<HashMap<String, u32>>,
    lens: Vec<usize>,
    df: HashMap<String, u32>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn build<'a>(nodes: impl IntoIterator<Item = &'a MethodNode>, params: Bm25Params) -> Result<Self, EvalError> {
        if !(params.k1 > 0.0 && (0.0..=1.0).contains(&params.b)) {
            return Err(EvalError::Bm25Params {
                k1: params.k1,
                b: params.b,
            });
        }
        let mut index = Self {
            params,
            ids: Vec::new(),
            tf: Vec::new(),
            lens: Vec::new(),
            df: HashMap::new(),
            avgdl: 0.0,
        };
        for node in nodes {
            let toks = document_tokens(node);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *index.df.entry(t.clone()).or_default() += 1;
            }
            index.ids.push(node.id.clone());
            index.lens.push(toks.len());
            index.tf.push(tf);
        }
        if index.ids.is_empty() {
            return Err(EvalError::Empty);
        }
        index.avgdl = index.lens.iter().sum::<usize>() as f64 / index.ids.len() as f64;
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn score_tf(&self, terms: &BTreeSet<String>, tf: &HashMap<String, u32>, len: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let norm = if self.avgdl > 0.0 {
            k1 * (1.0 - b + b * len as f64 / self.avgdl)
        } else {
            k1
        };
        let mut s = 0.0;
        for t in terms {
            let f = tf.get(t).copied().unwrap_or(0) as f64;
            if f > 0.0 {
                s += self.idf(t) * f * (k1 + 1.0) / (f + norm);
            }
        }
        s
    }

    /// Scores an arbitrary token list against the index's corpus statistics.
    pub fn score_document(&self, query: &str, doc_tokens: &[String]) -> f64 {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in doc_tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        self.score_tf(&terms, &tf, doc_tokens.len())
    }

    /// Tokens of the indexed document at `i`, for perturbation tests.
    pub fn document(&self, i: usize) -> (&MethodId, Vec<String>) {
        let mut toks: Vec<String> = Vec::new();
        let mut sorted: Vec<_> = self.tf[i].iter().collect();
        sorted.sort();
        for (t, n) in sorted {
            toks.extend(std::iter::repeat_n(t.clone(), *n as usize));
        }
        (&self.ids[i], toks)
    }

    pub fn rank(&self, report_id: &str, query: &str) -> RankedList {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let mut ranked: Vec<(MethodId, f64)> = (0..self.ids.len())
            .map(|i| (self.ids[i].clone(), self.score_tf(&terms, &self.tf[i], self.lens[i])))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedList {
            query_report_id: report_id.to_string(),
            ranked,
        }
    }
}

pub fn bm25_rank<'a>(
    report_id: &str,
    query: &str,
    corpus: impl IntoIterator<Item = &'a MethodNode>,
    params: Bm25Params,
) -> Result<RankedList, EvalError> {
    Ok(Bm25Index::build(corpus, params)?.rank(report_id, query))
}

/// Percentage of rankings with a ground-truth method in the first `n`.
pub fn topn_recall(rankings: &[RankedList], gts: &BTreeMap<String, BTreeSet<MethodId>>, n: usize) -> f64 {
    let hits = rankings
        .iter()
        .filter(|r| {
            gts.get(&r.query_report_id)
                .and_then(|gt| r.first_hit(gt))
                .is_some_and(|rank| rank <= n)
        })
        .count();
    percent(hits, rankings.len())
}
