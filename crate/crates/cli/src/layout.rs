//! Output layout: run directories, the shared store cache and the ledger.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const LATEST: &str = "LATEST";
pub const LEDGER: &str = "ledger.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct RunDir {
    pub output_dir: PathBuf,
    pub id: String,
    pub dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && !id.starts_with('.')
}

impl RunDir {
    /// Creates (or reuses) `runs/<id>` and points `LATEST` at it. Without
    /// an id the current UTC time is used.
    pub fn create(output_dir: &Path, id: Option<&str>) -> Result<Self> {
        let id = match id {
            Some(id) => id.to_string(),
            None => chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string(),
        };
        if !valid_id(&id) {
            bail!("run id {id:?} may only use letters, digits, '-', '_' and '.'");
        }
        let run = Self::at(output_dir, &id);
        std::fs::create_dir_all(&run.dir).with_context(|| format!("creating {}", run.dir.display()))?;
        write_text(&output_dir.join(LATEST), &format!("{id}\n"))?;
        Ok(run)
    }

    /// An existing run: the given id, else the one named in `LATEST`.
    pub fn open(output_dir: &Path, id: Option<&str>) -> Result<Self> {
        let id = match id {
            Some(id) => id.to_string(),
            None => {
                let p = output_dir.join(LATEST);
                std::fs::read_to_string(&p)
                    .with_context(|| format!("no run given and {} is unreadable; run ingest first", p.display()))?
                    .trim()
                    .to_string()
            }
        };
        if !valid_id(&id) {
            bail!("run id {id:?} is not valid");
        }
        let run = Self::at(output_dir, &id);
        if !run.dir.join(MANIFEST).is_file() {
            bail!("run {id} has no manifest; run ingest first");
        }
        Ok(run)
    }

    fn at(output_dir: &Path, id: &str) -> Self {
        Self {
            output_dir: output_dir.to_path_buf(),
            id: id.to_string(),
            dir: output_dir.join("runs").join(id),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// Store cache location, relative to the output directory.
    pub fn store_rel(system: &str, commit: &str) -> String {
        format!("stores/{}/{commit}", system.to_ascii_lowercase())
    }

    /// Removes and recreates a stage's subdirectory so reruns leave no
    /// stale files behind.
    pub fn fresh_dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            std::fs::remove_dir_all(&p).with_context(|| format!("clearing {}", p.display()))?;
        }
        std::fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok(p)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Processed,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub status: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub detail: BTreeMap<String, Value>,
}

impl Entry {
    pub fn processed() -> Self {
        Self {
            status: Outcome::Processed,
            reason: None,
            detail: BTreeMap::new(),
        }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Self {
            status: Outcome::Skipped,
            reason: Some(reason.into()),
            detail: BTreeMap::new(),
        }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        Self {
            status: Outcome::Failed,
            reason: Some(reason.into()),
            detail: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.detail.insert(key.to_string(), serde_json::to_value(value).expect("detail serializes"));
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageLedger {
    pub processed: usize,
    pub skipped: usize,
    pub failed: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub totals: BTreeMap<String, Value>,
    pub reports: BTreeMap<String, Entry>,
}

impl StageLedger {
    pub fn new(reports: BTreeMap<String, Entry>) -> Self {
        let count = |o: Outcome| reports.values().filter(|e| e.status == o).count();
        Self {
            processed: count(Outcome::Processed),
            skipped: count(Outcome::Skipped),
            failed: count(Outcome::Failed),
            totals: BTreeMap::new(),
            reports,
        }
    }
}

/// One section per stage; rerunning a stage replaces only its section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub run_id: String,
    pub stages: BTreeMap<String, StageLedger>,
}

impl Ledger {
    pub fn update(run: &RunDir, stage: &str, section: StageLedger) -> Result<()> {
        let path = run.path(LEDGER);
        let mut ledger: Ledger = if path.is_file() { read_json(&path)? } else { Ledger::default() };
        ledger.run_id = run.id.clone();
        ledger.stages.insert(stage.to_string(), section);
        write_json(&path, &ledger)
    }

    pub fn read(run: &RunDir) -> Result<Ledger> {
        read_json(&run.path(LEDGER))
    }

    /// Entries of a stage from an earlier invocation, for partial reruns.
    pub fn entries(run: &RunDir, stage: &str) -> Result<BTreeMap<String, Entry>> {
        let path = run.path(LEDGER);
        if !path.is_file() {
            return Ok(BTreeMap::new());
        }
        let mut ledger: Ledger = read_json(&path)?;
        Ok(ledger.stages.remove(stage).map(|s| s.reports).unwrap_or_default())
    }
}
