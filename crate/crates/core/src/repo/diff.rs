//! Unified diff parsing and exact (fuzz 0) application.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    Context,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    pub lines: Vec<(LineKind, String)>,
}

impl Hunk {
    /// Lines the hunk expects to find in the old file.
    pub fn old_lines(&self) -> impl Iterator<Item = &str> {
        self.lines
            .iter()
            .filter(|(k, _)| *k != LineKind::Added)
            .map(|(_, l)| l.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilePatch {
    /// `None` for a created file.
    pub old_path: Option<String>,
    /// `None` for a deleted file.
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("diff line {line}: {message}")]
pub struct DiffParseError {
    pub line: usize,
    pub message: String,
}

fn strip_prefix(path: &str) -> Option<String> {
    let path = path.trim_end_matches('\t').split('\t').next().unwrap_or(path);
    if path == "/dev/null" {
        return None;
    }
    let path = path.trim_matches('"');
    Some(
        path.strip_prefix("a/")
            .or_else(|| path.strip_prefix("b/"))
            .unwrap_or(path)
            .to_string(),
    )
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (os, ol) = parse_range(old)?;
    let (ns, nl) = parse_range(new)?;
    Some((os, ol, ns, nl))
}

/// Parses a multi-file unified diff as produced by `git diff`.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FilePatch>, DiffParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files: Vec<FilePatch> = Vec::new();
    let mut i = 0;
    let err = |line: usize, message: &str| DiffParseError {
        line: line + 1,
        message: message.to_string(),
    };
    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            let mut fp = FilePatch::default();
            if let Some((a, b)) = rest.split_once(" b/") {
                fp.old_path = strip_prefix(a);
                fp.new_path = Some(b.to_string());
            }
            files.push(fp);
            i += 1;
            continue;
        }
        if let Some(old) = line.strip_prefix("--- ") {
            let Some(next) = lines.get(i + 1).filter(|l| l.starts_with("+++ ")) else {
                return Err(err(i, "'---' header without '+++'"));
            };
            let old = strip_prefix(old);
            let new = strip_prefix(&next[4..]);
            let continuing = files
                .last()
                .is_some_and(|f| f.hunks.is_empty() && !f.binary);
            if !continuing {
                files.push(FilePatch::default());
            }
            let fp = files.last_mut().unwrap();
            fp.old_path = old;
            fp.new_path = new;
            i += 2;
            continue;
        }
        if let Some((os, ol, ns, nl)) = line.starts_with("@@").then(|| parse_hunk_header(line)).flatten() {
            let Some(fp) = files.last_mut() else {
                return Err(err(i, "hunk before any file header"));
            };
            let mut hunk = Hunk {
                old_start: os,
                old_len: ol,
                new_start: ns,
                new_len: nl,
                lines: Vec::new(),
            };
            let (mut old_left, mut new_left) = (ol, nl);
            i += 1;
            while (old_left > 0 || new_left > 0) && i < lines.len() {
                let l = lines[i];
                let (kind, body) = match l.chars().next() {
                    Some(' ') => (LineKind::Context, &l[1..]),
                    Some('-') => (LineKind::Removed, &l[1..]),
                    Some('+') => (LineKind::Added, &l[1..]),
                    Some('\\') => {
                        i += 1;
                        continue;
                    }
                    // Some tools drop the space on empty context lines.
                    None => (LineKind::Context, ""),
                    _ => return Err(err(i, "unexpected line inside hunk")),
                };
                match kind {
                    LineKind::Context => {
                        old_left = old_left.saturating_sub(1);
                        new_left = new_left.saturating_sub(1);
                    }
                    LineKind::Removed => old_left = old_left.saturating_sub(1),
                    LineKind::Added => new_left = new_left.saturating_sub(1),
                }
                hunk.lines.push((kind, body.to_string()));
                i += 1;
            }
            if old_left > 0 || new_left > 0 {
                return Err(err(i.saturating_sub(1), "hunk is shorter than its header says"));
            }
            while lines.get(i).is_some_and(|l| l.starts_with('\\')) {
                i += 1;
            }
            fp.hunks.push(hunk);
            continue;
        }
        if let Some(fp) = files.last_mut() {
            if let Some(p) = line.strip_prefix("rename from ") {
                fp.old_path = Some(p.to_string());
            } else if let Some(p) = line.strip_prefix("rename to ") {
                fp.new_path = Some(p.to_string());
            } else if line.starts_with("new file mode") {
                fp.old_path = None;
            } else if line.starts_with("deleted file mode") {
                fp.new_path = None;
            } else if line.starts_with("Binary files ") || line == "GIT binary patch" {
                fp.binary = true;
            }
        }
        i += 1;
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("hunk {hunk} (@@ -{old_start}) does not apply")]
pub struct ApplyError {
    pub hunk: usize,
    pub old_start: u32,
}

/// Where each hunk matched: the 1-based old line of its first old-side line.
/// Context must match exactly; only the position may shift.
pub fn locate_hunks(old: &[&str], hunks: &[Hunk]) -> Result<Vec<u32>, ApplyError> {
    let mut out = Vec::with_capacity(hunks.len());
    let mut floor = 0usize;
    for (n, h) in hunks.iter().enumerate() {
        let want: Vec<&str> = h.old_lines().collect();
        // For a zero-length old side the header names the line before the insertion.
        let nominal = if want.is_empty() {
            h.old_start as usize
        } else {
            (h.old_start as usize).saturating_sub(1)
        };
        let fits = |at: usize| {
            at >= floor && at + want.len() <= old.len() && old[at..at + want.len()] == want[..]
        };
        let mut found = None;
        for delta in 0..=old.len() {
            if nominal >= delta && fits(nominal - delta) {
                found = Some(nominal - delta);
                break;
            }
            if fits(nominal + delta) {
                found = Some(nominal + delta);
                break;
            }
        }
        let at = found.ok_or(ApplyError {
            hunk: n,
            old_start: h.old_start,
        })?;
        floor = at + want.len();
        out.push(at as u32 + 1);
    }
    Ok(out)
}

/// Applies all hunks to `old`, returning the new text.
pub fn apply(old: &str, hunks: &[Hunk]) -> Result<String, ApplyError> {
    let lines: Vec<&str> = old.lines().collect();
    let at = locate_hunks(&lines, hunks)?;
    let mut out: Vec<&str> = Vec::with_capacity(lines.len());
    let mut cursor = 0usize;
    for (h, start) in hunks.iter().zip(at) {
        let start = start as usize - 1;
        out.extend_from_slice(&lines[cursor..start]);
        cursor = start;
        for (kind, text) in &h.lines {
            match kind {
                LineKind::Context => {
                    out.push(lines[cursor]);
                    cursor += 1;
                }
                LineKind::Removed => cursor += 1,
                LineKind::Added => out.push(text),
            }
        }
    }
    out.extend_from_slice(&lines[cursor..]);
    let mut text = out.join("\n");
    if !text.is_empty() && (old.ends_with('\n') || old.is_empty()) {
        text.push('\n');
    }
    Ok(text)
}
