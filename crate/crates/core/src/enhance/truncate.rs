use crate::jindex::MethodNode;
use crate::llm::TokenEstimator;

use super::prompt::method_block;

/// Appended to a body cut short to fit the window.
pub const TRUNCATION_MARKER: &str = "\n// ... truncated";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub methods: Vec<MethodNode>,
    pub dropped: usize,
    /// The single kept method had its body shortened.
    pub body_truncated: bool,
}

pub fn method_cost(m: &MethodNode, est: &dyn TokenEstimator) -> usize {
    est.estimate(&method_block(m))
}

/// Keeps the longest topmost-first prefix whose blocks plus `overhead` fit in
/// `budget`. When not even the first method fits, it is kept with the tail
/// of its body cut.
pub fn truncate_for_budget(
    methods: &[MethodNode],
    budget: usize,
    overhead: usize,
    est: &dyn TokenEstimator,
) -> Truncation {
    let room = budget.saturating_sub(overhead);
    let mut used = 0;
    let mut kept = 0;
    for m in methods {
        let c = method_cost(m, est);
        if used + c > room {
            break;
        }
        used += c;
        kept += 1;
    }
    if kept > 0 || methods.is_empty() {
        return Truncation {
            methods: methods[..kept].to_vec(),
            dropped: methods.len() - kept,
            body_truncated: false,
        };
    }
    let top = &methods[0];
    let cut = |n: usize| {
        let mut m = top.clone();
        m.body_text = format!("{}{TRUNCATION_MARKER}", &top.body_text[..n]);
        m
    };
    // Char boundaries of the body, searched for the longest fitting cut.
    let bounds: Vec<usize> = top
        .body_text
        .char_indices()
        .map(|(i, _)| i)
        .chain([top.body_text.len()])
        .collect();
    let (mut lo, mut hi) = (0, bounds.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if method_cost(&cut(bounds[mid]), est) <= room {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Truncation {
        methods: vec![cut(bounds[lo])],
        dropped: methods.len() - 1,
        body_truncated: true,
    }
}
