#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crashctx_cli::{Mode, RunConfig, TransportFactory};
use crashctx_core::llm::{ScriptedTransport, Transport};
use crashctx_core::repo::testkit::build_repo;
use serde_json::Value;
use tempfile::TempDir;

pub const REPORTS: [&str; 3] = ["ZOOKEEPER-2581", "ZOOKEEPER-2600", "ZOOKEEPER-2630"];

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/zookeeper")
}

pub struct Workspace {
    pub tmp: TempDir,
    pub config_path: PathBuf,
    pub cfg: RunConfig,
}

impl Workspace {
    pub fn out(&self) -> PathBuf {
        self.cfg.output_dir.clone()
    }
}

/// Builds the fixture repository into a fresh directory and writes a
/// config pointing at it. `transcripts` defaults to the bundled recordings.
pub fn workspace(mode: &str, transcripts: Option<&Path>, extra: &str) -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let repos = tmp.path().join("repos");
    build_repo(&fixture().join("repo"), &repos.join("zookeeper")).unwrap();
    let transcripts = transcripts.map_or_else(|| fixture().join("transcripts"), Path::to_path_buf);
    let text = format!(
        "corpus = {corpus:?}\nrepos_root = {repos:?}\noutput_dir = {out:?}\nparallelism = 3\n{extra}\n\n[transcripts]\nmode = {mode:?}\ndir = {tr:?}\n",
        corpus = fixture().join("corpus"),
        out = tmp.path().join("out"),
        tr = transcripts,
    );
    let config_path = tmp.path().join("crashctx.toml");
    std::fs::write(&config_path, text).unwrap();
    let cfg = RunConfig::load(&config_path).unwrap();
    Workspace { tmp, config_path, cfg }
}

/// Replies the bundled scripts give for one report.
pub fn script(mode: Mode, id: &str) -> Vec<String> {
    let path = fixture().join("scripts").join(mode.name()).join(format!("{id}.json"));
    let v: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.into_iter()
        .map(|x| match x {
            Value::String(s) => s,
            other => other.to_string(),
        })
        .collect()
}

pub fn scripted() -> TransportFactory {
    Arc::new(|mode, id| Arc::new(ScriptedTransport::new(script(mode, id))) as Arc<dyn Transport>)
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
