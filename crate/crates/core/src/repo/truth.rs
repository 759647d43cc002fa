//! Modified-method sets from a fixing patch and the pre-fix tree.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diff::{apply, locate_hunks, parse_unified_diff, Hunk, LineKind};
use super::RepoError;
use crate::jindex::{is_excluded, parse_file, MethodId, MethodNode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedBody {
    pub id: MethodId,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub report_id: String,
    pub fix_commit: String,
    pub modified_methods: BTreeSet<MethodId>,
    pub patch_text: String,
    /// Files with hunks outside every method; kept out of `modified_methods`.
    #[serde(default)]
    pub pseudo_files: BTreeSet<String>,
    /// Bodies of the modified methods after the fix, where they still exist.
    #[serde(default)]
    pub post_fix_bodies: Vec<FixedBody>,
}

/// Old-side lines a hunk touches.
#[derive(Debug, Default, PartialEq, Eq)]
struct Touches {
    deleted: Vec<u32>,
    /// Pure insertions, as the old line they follow (0 = file start).
    anchors: Vec<u32>,
}

fn touches(hunk: &Hunk, first_old_line: u32, out: &mut Touches) {
    let mut line = first_old_line;
    let mut removed = Vec::new();
    let mut added = false;
    let mut block_start = line;
    fn flush(removed: &mut Vec<u32>, added: &mut bool, block_start: u32, out: &mut Touches) {
        if !removed.is_empty() {
            out.deleted.append(removed);
        } else if *added {
            out.anchors.push(block_start - 1);
        }
        *added = false;
    }
    for (kind, _) in &hunk.lines {
        match kind {
            LineKind::Context => {
                flush(&mut removed, &mut added, block_start, out);
                line += 1;
                block_start = line;
            }
            LineKind::Removed => {
                removed.push(line);
                line += 1;
            }
            LineKind::Added => added = true,
        }
    }
    flush(&mut removed, &mut added, block_start, out);
}

fn spans(m: &MethodNode) -> impl Iterator<Item = &(u32, u32)> {
    std::iter::once(&m.span).chain(&m.extra_spans)
}

/// Attributes touched lines to methods; returns whether any touch fell outside.
fn attribute(methods: &[MethodNode], t: &Touches, into: &mut BTreeSet<MethodId>) -> bool {
    let mut stray = methods.is_empty() && (!t.deleted.is_empty() || !t.anchors.is_empty());
    for &l in &t.deleted {
        let mut hit = false;
        for m in methods.iter().filter(|m| m.contains_line(l)) {
            into.insert(m.id.clone());
            hit = true;
        }
        stray |= !hit;
    }
    for &p in &t.anchors {
        let mut hit = false;
        for m in methods.iter().filter(|m| spans(m).any(|&(s, e)| s <= p && p < e)) {
            into.insert(m.id.clone());
            hit = true;
        }
        stray |= !hit;
    }
    stray
}

fn is_source(path: &str) -> bool {
    path.ends_with(".java")
}

/// Derives the ground truth of `patch_text` against the checked-out pre-fix tree.
pub fn extract_ground_truth(
    report_id: &str,
    fix_commit: &str,
    snapshot_tree: &Path,
    patch_text: &str,
    exclude: &[String],
) -> Result<GroundTruth, RepoError> {
    let files = parse_unified_diff(patch_text).map_err(|e| RepoError::Patch {
        file: String::new(),
        reason: e.to_string(),
    })?;
    let mut gt = GroundTruth {
        report_id: report_id.to_string(),
        fix_commit: fix_commit.to_string(),
        modified_methods: BTreeSet::new(),
        patch_text: patch_text.to_string(),
        pseudo_files: BTreeSet::new(),
        post_fix_bodies: Vec::new(),
    };
    for fp in files {
        if fp.binary || fp.hunks.is_empty() {
            continue;
        }
        let Some(old_path) = fp.old_path.as_deref() else {
            if let Some(new) = fp.new_path.as_deref().filter(|p| is_source(p)) {
                gt.pseudo_files.insert(new.to_string());
            }
            continue;
        };
        if !is_source(old_path) || is_excluded(old_path, exclude) {
            continue;
        }
        let full = snapshot_tree.join(old_path);
        let bytes = std::fs::read(&full).map_err(|e| RepoError::Patch {
            file: old_path.to_string(),
            reason: format!("cannot read pre-fix file: {e}"),
        })?;
        let old_text = String::from_utf8_lossy(&bytes).into_owned();
        let old_lines: Vec<&str> = old_text.lines().collect();
        let starts = locate_hunks(&old_lines, &fp.hunks).map_err(|e| RepoError::Patch {
            file: old_path.to_string(),
            reason: e.to_string(),
        })?;
        let mut t = Touches::default();
        for (h, &s) in fp.hunks.iter().zip(&starts) {
            touches(h, s, &mut t);
        }
        let parsed = parse_file(old_path, &old_text);
        let mut hit = BTreeSet::new();
        if attribute(&parsed.methods, &t, &mut hit) {
            gt.pseudo_files.insert(old_path.to_string());
        }
        if let Some(new_path) = fp.new_path.as_deref() {
            let new_text = apply(&old_text, &fp.hunks).map_err(|e| RepoError::Patch {
                file: old_path.to_string(),
                reason: e.to_string(),
            })?;
            let after = parse_file(new_path, &new_text);
            for id in &hit {
                let body = after.methods.iter().find(|m| {
                    m.id.class_fqn == id.class_fqn
                        && m.id.method_name == id.method_name
                        && m.id.arity == id.arity
                });
                if let Some(m) = body {
                    gt.post_fix_bodies.push(FixedBody {
                        id: id.clone(),
                        body: m.body_text.clone(),
                    });
                }
            }
        }
        gt.modified_methods.extend(hit);
    }
    gt.post_fix_bodies.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(gt)
}
