//! Snapshot resolution, checkout and ground truth from fixing commits.

pub mod diff;
pub mod testkit;
mod truth;

pub use truth::{extract_ground_truth, FixedBody, GroundTruth};

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("{report}: no commit precedes {created_at}")]
    Resolution {
        report: String,
        created_at: DateTime<Utc>,
    },
    #[error("`git {command}` failed: {stderr}")]
    Vcs { command: String, stderr: String },
    #[error("patch does not apply to {file}: {reason}")]
    Patch { file: String, reason: String },
    #[error("{path}: {error}")]
    Io {
        path: String,
                error: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub id: String,
    pub time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRef {
    pub commit_id: String,
    pub resolved_for: String,
    pub commit_time: DateTime<Utc>,
}

/// Picks the last commit strictly before `created_at`. `history` is oldest
/// first; among equal times the later entry wins.
pub fn resolve_snapshot(
    history: &[Commit],
    created_at: DateTime<Utc>,
    report_id: &str,
) -> Result<SnapshotRef, RepoError> {
    let mut best: Option<&Commit> = None;
    for c in history.iter().filter(|c| c.time < created_at) {
        if best.is_none_or(|b| c.time >= b.time) {
            best = Some(c);
        }
    }
    best.map(|c| SnapshotRef {
        commit_id: c.id.clone(),
        resolved_for: report_id.to_string(),
        commit_time: c.time,
    })
    .ok_or_else(|| RepoError::Resolution {
        report: report_id.to_string(),
        created_at,
    })
}

/// What the pipeline needs from version control.
pub trait VcsClient: Send + Sync {
    fn workdir(&self) -> &Path;
    /// First-parent history of `branch`, oldest first.
    fn log(&self, branch: &str) -> Result<Vec<Commit>, RepoError>;
    fn checkout(&self, commit_id: &str) -> Result<(), RepoError>;
    /// Unified diff of `commit_id` against its first parent.
    fn diff(&self, commit_id: &str) -> Result<String, RepoError>;
}

/// `git` on the PATH, run inside one working tree.
#[derive(Debug)]
pub struct GitCli {
    workdir: PathBuf,
    lock: Mutex<()>,
}

const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

impl GitCli {
    pub fn new(workdir: impl Into<PathBuf>) -> Self {
        Self {
            workdir: workdir.into(),
            lock: Mutex::new(()),
        }
    }

    fn git(&self, args: &[&str]) -> Result<String, RepoError> {
        let out = Command::new("git")
            .args(["-c", "core.quotepath=off", "-c", "color.ui=never"])
            .args(args)
            .current_dir(&self.workdir)
            .env("LC_ALL", "C")
            .output()
            .map_err(|e| RepoError::Vcs {
                command: args.join(" "),
                stderr: e.to_string(),
            })?;
        if !out.status.success() {
            return Err(RepoError::Vcs {
                command: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }
}

impl VcsClient for GitCli {
    fn workdir(&self) -> &Path {
        &self.workdir
    }

    fn log(&self, branch: &str) -> Result<Vec<Commit>, RepoError> {
        let text = self.git(&["log", "--first-parent", "--format=%H %ct", branch, "--"])?;
        let mut out = Vec::new();
        for line in text.lines().rev() {
            let Some((id, ts)) = line.split_once(' ') else {
                continue;
            };
            let time = ts
                .parse::<i64>()
                .ok()
                .and_then(|s| Utc.timestamp_opt(s, 0).single())
                .ok_or_else(|| RepoError::Vcs {
                    command: "log".into(),
                    stderr: format!("bad timestamp in {line:?}"),
                })?;
            out.push(Commit {
                id: id.to_string(),
                time,
            });
        }
        Ok(out)
    }

    fn checkout(&self, commit_id: &str) -> Result<(), RepoError> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        self.git(&["checkout", "--quiet", "--detach", commit_id, "--"])?;
        Ok(())
    }

    fn diff(&self, commit_id: &str) -> Result<String, RepoError> {
        let parents = self.git(&["rev-list", "--parents", "-n", "1", commit_id, "--"])?;
        let base = if parents.split_whitespace().count() > 1 {
            format!("{commit_id}^1")
        } else {
            EMPTY_TREE.to_string()
        };
        self.git(&["diff", "--no-ext-diff", "--find-renames", &base, commit_id, "--"])
    }
}

/// SHA-256 over every file of the working tree except `.git`, path-sorted.
pub fn tree_digest(workdir: &Path) -> Result<String, RepoError> {
    let mut hasher = Sha256::new();
    let walker = WalkDir::new(workdir)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.file_name() != ".git");
    for entry in walker {
        let entry = entry.map_err(|e| RepoError::Io {
            path: workdir.display().to_string(),
            error: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(workdir).unwrap_or(entry.path());
        let bytes = std::fs::read(entry.path()).map_err(|e| RepoError::Io {
            path: entry.path().display().to_string(),
            error: e,
        })?;
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
