//! Builds small deterministic git repositories from a description directory.
//!
//! The directory holds `history.toml` plus one full tree per commit:
//!
//! ```toml
//! [[commit]]
//! label = "c1"
//! date = "2016-08-01T10:00:00Z"
//! message = "Initial import"
//! tree = "trees/c1"
//! ```
//!
//! Fixed identities and dates make the commit ids reproducible.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use serde::Deserialize;
use walkdir::WalkDir;

use super::RepoError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct History {
    commit: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    label: String,
    date: String,
    message: String,
    tree: String,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RepoError + '_ {
    move |source| RepoError::Io {
        path: path.display().to_string(),
        error: source,
    }
}

fn git(dest: &Path, args: &[&str], date: Option<&str>) -> Result<String, RepoError> {
    let mut cmd = Command::new("git");
    cmd.args(args)
        .current_dir(dest)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_AUTHOR_NAME", "Fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.org")
        .env("GIT_COMMITTER_NAME", "Fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.org")
        .env("LC_ALL", "C");
    if let Some(d) = date {
        cmd.env("GIT_AUTHOR_DATE", d).env("GIT_COMMITTER_DATE", d);
    }
    let out = cmd.output().map_err(|e| RepoError::Vcs {
        command: args.join(" "),
        stderr: e.to_string(),
    })?;
    if !out.status.success() {
        return Err(RepoError::Vcs {
            command: args.join(" "),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn clear_worktree(dest: &Path) -> Result<(), RepoError> {
    for entry in std::fs::read_dir(dest).map_err(io(dest))? {
        let entry = entry.map_err(io(dest))?;
        if entry.file_name() == ".git" {
            continue;
        }
        let path = entry.path();
        if path.is_dir() {
            std::fs::remove_dir_all(&path).map_err(io(&path))?;
        } else {
            std::fs::remove_file(&path).map_err(io(&path))?;
        }
    }
    Ok(())
}

fn copy_tree(src: &Path, dest: &Path) -> Result<(), RepoError> {
    for entry in WalkDir::new(src).sort_by_file_name() {
        let entry = entry.map_err(|e| RepoError::Io {
            path: src.display().to_string(),
            error: e.into(),
        })?;
        let rel = entry.path().strip_prefix(src).unwrap();
        let target = dest.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target).map_err(io(&target))?;
        } else {
            std::fs::copy(entry.path(), &target).map_err(io(&target))?;
        }
    }
    Ok(())
}

/// Creates the repository at `dest` (which must not exist or be empty) on
/// branch `main` and returns label to commit id.
pub fn build_repo(spec_dir: &Path, dest: &Path) -> Result<BTreeMap<String, String>, RepoError> {
    let hist_path = spec_dir.join("history.toml");
    let text = std::fs::read_to_string(&hist_path).map_err(io(&hist_path))?;
    let history: History = toml::from_str(&text).map_err(|e| RepoError::Io {
        path: hist_path.display().to_string(),
        error: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
    })?;
    std::fs::create_dir_all(dest).map_err(io(dest))?;
    git(dest, &["init", "--quiet", "-b", "main"], None)?;
    git(dest, &["config", "commit.gpgsign", "false"], None)?;
    git(dest, &["config", "core.autocrlf", "false"], None)?;
    let mut ids = BTreeMap::new();
    for e in &history.commit {
        clear_worktree(dest)?;
        copy_tree(&spec_dir.join(&e.tree), dest)?;
        git(dest, &["add", "--all"], None)?;
        git(dest, &["commit", "--quiet", "--allow-empty", "-m", &e.message], Some(&e.date))?;
        ids.insert(e.label.clone(), git(dest, &["rev-parse", "HEAD"], None)?);
    }
    Ok(ids)
}
