//! One module per subcommand.

pub mod enhance;
pub mod evaluate;
pub mod index;
pub mod ingest;
pub mod report;

use std::collections::BTreeMap;

use anyhow::Context;

use crashctx_core::ingest::CrashReport;

use crate::layout::{read_json, RunDir, MANIFEST};
use crate::{Failure, StageResult};

pub(crate) const REPORTS_DIR: &str = "reports";

/// Retained reports of a run, by id.
pub(crate) fn retained(run: &RunDir) -> StageResult<BTreeMap<String, CrashReport>> {
    let manifest: ingest::Manifest = read_json(&run.path(MANIFEST)).map_err(Failure::usage)?;
    let mut out = BTreeMap::new();
    for id in manifest.retained {
        let path = run.path(&format!("{REPORTS_DIR}/{id}.json"));
        let r: CrashReport = read_json(&path)
            .with_context(|| format!("run {} is missing report {id}", run.id))
            .map_err(Failure::environment)?;
        out.insert(id, r);
    }
    Ok(out)
}

/// Restricts `all` to `only` when it is non-empty; unknown ids are a usage error.
pub(crate) fn select<T>(mut all: BTreeMap<String, T>, only: &[String]) -> StageResult<BTreeMap<String, T>> {
    if only.is_empty() {
        return Ok(all);
    }
    let mut out = BTreeMap::new();
    for id in only {
        match all.remove(id) {
            Some(v) => {
                out.insert(id.clone(), v);
            }
            None => return Err(Failure::usage(anyhow::anyhow!("report {id} is not in the run manifest"))),
        }
    }
    Ok(out)
}
