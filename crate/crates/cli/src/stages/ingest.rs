use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crashctx_core::ingest::{first_failing_filter, load_corpus, Filter};

use super::REPORTS_DIR;
use crate::config::RunConfig;
use crate::layout::{write_json, Entry, Ledger, RunDir, StageLedger, MANIFEST};
use crate::{Failure, StageResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTally {
    pub filter: Filter,
    /// Reports that reached this filter.
    pub checked: usize,
    pub passed: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub records: usize,
    pub retained: Vec<String>,
    /// Dropped report id and the first filter it failed.
    pub dropped: BTreeMap<String, Filter>,
    pub filters: Vec<FilterTally>,
    /// Retained reports per system.
    pub systems: BTreeMap<String, usize>,
}

pub fn run(cfg: &RunConfig, run_id: Option<&str>) -> StageResult<RunDir> {
    let reports = load_corpus(&cfg.corpus).map_err(Failure::environment)?;
    let run = RunDir::create(&cfg.output_dir, run_id).map_err(Failure::environment)?;
    let reports_dir = run.fresh_dir(REPORTS_DIR).map_err(Failure::environment)?;

    let mut dropped = BTreeMap::new();
    let mut retained = Vec::new();
    let mut systems = BTreeMap::new();
    let mut entries = BTreeMap::new();
    for r in &reports {
        match first_failing_filter(r) {
            Some(f) => {
                dropped.insert(r.id.clone(), f);
                entries.insert(r.id.clone(), Entry::skipped(format!("filtered: {}", f.name())));
            }
            None => {
                retained.push(r.id.clone());
                *systems.entry(r.system().to_string()).or_insert(0) += 1;
                entries.insert(r.id.clone(), Entry::processed());
                write_json(&reports_dir.join(format!("{}.json", r.id)), r).map_err(Failure::environment)?;
            }
        }
    }
    let mut reaching = reports.len();
    let filters = Filter::ALL
        .iter()
        .map(|&f| {
            let n = dropped.values().filter(|d| **d == f).count();
            let t = FilterTally {
                filter: f,
                checked: reaching,
                passed: reaching - n,
                dropped: n,
            };
            reaching -= n;
            t
        })
        .collect();
    let manifest = Manifest {
        records: reports.len(),
        retained,
        dropped,
        filters,
        systems,
    };
    write_json(&run.path(MANIFEST), &manifest).map_err(Failure::environment)?;
    Ledger::update(&run, "ingest", StageLedger::new(entries)).map_err(Failure::environment)?;
    log::info!(
        "ingest: {} of {} reports retained into run {}",
        manifest.retained.len(),
        manifest.records,
        run.id
    );
    Ok(run)
}
