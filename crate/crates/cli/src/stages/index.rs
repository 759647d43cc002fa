use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crashctx_core::ingest::CrashReport;
use crashctx_core::jindex::{build_call_graph, parse_tree};
use crashctx_core::repo::{extract_ground_truth, resolve_snapshot, Commit, GitCli, SnapshotRef, VcsClient};
use crashctx_core::store::{content_hash, GraphStore, TOOL_VERSION};

use super::{retained, select};
use crate::config::RunConfig;
use crate::layout::{write_json, Entry, Ledger, RunDir, StageLedger};
use crate::{Failure, StageResult};

pub const INDEX_DIR: &str = "index";
pub const TRUTH_DIR: &str = "truth";
const STAGE: &str = "index";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub report_id: String,
    pub system: String,
    pub snapshot: SnapshotRef,
    /// Store directory relative to the output directory.
    pub store: String,
    pub store_sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub fix_commit: String,
    /// Tree the ground truth was computed against.
    pub fix_parent: String,
}

pub fn run(cfg: &RunConfig, run: &RunDir, only: &[String]) -> StageResult {
    if !cfg.repos_root.is_dir() {
        return Err(Failure::environment(anyhow!(
            "repository root {} is not a directory",
            cfg.repos_root.display()
        )));
    }
    let reports = select(retained(run)?, only)?;
    let (index_dir, truth_dir) = if only.is_empty() {
        (run.fresh_dir(INDEX_DIR), run.fresh_dir(TRUTH_DIR))
    } else {
        (Ok(run.path(INDEX_DIR)), Ok(run.path(TRUTH_DIR)))
    };
    let index_dir = index_dir.map_err(Failure::environment)?;
    let truth_dir = truth_dir.map_err(Failure::environment)?;

    let mut by_system: BTreeMap<String, Vec<&CrashReport>> = BTreeMap::new();
    for r in reports.values() {
        by_system.entry(r.system().to_string()).or_default().push(r);
    }
    let results: Vec<(String, Entry)> = by_system
        .par_iter()
        .flat_map_iter(|(system, reports)| index_system(cfg, system, reports, &index_dir, &truth_dir))
        .collect();

    let mut entries = if only.is_empty() {
        BTreeMap::new()
    } else {
        Ledger::entries(run, STAGE).map_err(Failure::environment)?
    };
    entries.extend(results);
    let section = StageLedger::new(entries);
    let all_failed = !reports.is_empty() && section.processed == 0;
    Ledger::update(run, STAGE, section).map_err(Failure::environment)?;
    if all_failed {
        return Err(Failure::systemic(anyhow!("no report could be indexed; see the run ledger")));
    }
    Ok(())
}

fn index_system(
    cfg: &RunConfig,
    system: &str,
    reports: &[&CrashReport],
    index_dir: &Path,
    truth_dir: &Path,
) -> Vec<(String, Entry)> {
    let workdir = cfg.repo_dir(system);
    if !workdir.join(".git").exists() {
        let why = format!("no clone at {}", workdir.display());
        log::warn!("{system}: {why}");
        return reports.iter().map(|r| (r.id.clone(), Entry::skipped(why.clone()))).collect();
    }
    let vcs = GitCli::new(&workdir);
    let history = match vcs.log(&cfg.branch) {
        Ok(h) => h,
        Err(e) => {
            let why = format!("history of {}: {e}", cfg.branch);
            return reports.iter().map(|r| (r.id.clone(), Entry::skipped(why.clone()))).collect();
        }
    };
    let mut out = Vec::new();
    for r in reports {
        let entry = match index_report(cfg, &vcs, &history, system, r, index_dir, truth_dir) {
            Ok(rec) => Entry::processed()
                .with("snapshot", &rec.snapshot.commit_id)
                .with("store", &rec.store)
                .with("fix_parent", &rec.fix_parent),
            Err(e) => {
                log::warn!("{}: {e:#}", r.id);
                Entry::skipped(format!("{e:#}"))
            }
        };
        out.push((r.id.clone(), entry));
    }
    if let Err(e) = vcs.checkout(&cfg.branch) {
        log::warn!("{system}: could not return to {}: {e}", cfg.branch);
    }
    out
}

fn index_report(
    cfg: &RunConfig,
    vcs: &GitCli,
    history: &[Commit],
    system: &str,
    r: &CrashReport,
    index_dir: &Path,
    truth_dir: &Path,
) -> Result<IndexRecord> {
    let fix = r.fix_commit.as_deref().ok_or_else(|| anyhow!("no fix commit"))?;
    let snapshot = resolve_snapshot(history, r.created_at, &r.id)?;
    let store_rel = RunDir::store_rel(system, &snapshot.commit_id);
    let store_dir = cfg.output_dir.join(&store_rel);
    let meta = if reusable(&store_dir, &snapshot.commit_id) {
        log::debug!("{}: reusing store {store_rel}", r.id);
        GraphStore::read_meta(&store_dir)?
    } else {
        vcs.checkout(&snapshot.commit_id)?;
        let parsed = parse_tree(vcs.workdir(), &cfg.exclude).context("parsing the snapshot")?;
        let graph = build_call_graph(&parsed);
        if store_dir.exists() {
            std::fs::remove_dir_all(&store_dir)?;
        }
        log::info!(
            "{}: built store for {} ({} methods)",
            r.id,
            snapshot.commit_id,
            graph.nodes.len()
        );
        GraphStore::new(graph, &snapshot.commit_id).save(&store_dir)?
    };
    let store_sha256 = content_hash(&store_dir)?;

    let fix_parent = match history.iter().position(|c| c.id.starts_with(fix)) {
        Some(i) if i > 0 => history[i - 1].id.clone(),
        _ => format!("{fix}^1"),
    };
    let patch = vcs.diff(fix).context("reading the fix commit")?;
    vcs.checkout(&fix_parent).context("checking out the pre-fix tree")?;
    let truth = extract_ground_truth(&r.id, fix, vcs.workdir(), &patch, &cfg.exclude)?;
    if truth.modified_methods.is_empty() {
        log::warn!("{}: the fix changes no indexed method", r.id);
    }
    write_json(&truth_dir.join(format!("{}.json", r.id)), &truth)?;

    let rec = IndexRecord {
        report_id: r.id.clone(),
        system: system.to_string(),
        snapshot,
        store: store_rel,
        store_sha256,
        nodes: meta.nodes,
        edges: meta.edges,
        fix_commit: fix.to_string(),
        fix_parent,
    };
    write_json(&index_dir.join(format!("{}.json", r.id)), &rec)?;
    Ok(rec)
}

/// A cached store is reused when its meta names the same commit and tool
/// version and its checksums still hold.
fn reusable(dir: &Path, commit: &str) -> bool {
    GraphStore::read_meta(dir).is_ok_and(|m| m.commit_id == commit && m.tool_version == TOOL_VERSION)
        && GraphStore::load(dir).is_ok()
}
