//! On-disk graph store with cached neighbor queries and a lookup log.
//!
//! A store directory holds three files: `graph.idx` (one JSON record per
//! line: a header, then nodes in id order, then edges as node indices),
//! `bodies.dat` (all method bodies back to back, addressed from the node
//! records) and `meta` (TOML: format version, commit, counts, checksums).

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jindex::{BuildStats, CallGraph, MethodId, MethodNode};

pub const FORMAT_VERSION: u32 = 1;
pub const GRAPH_FILE: &str = "graph.idx";
/// Written into every store's meta; stores from other versions are rebuilt.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BODIES_FILE: &str = "bodies.dat";
pub const META_FILE: &str = "meta";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {error}")]
    Io {
        path: String,
                error: std::io::Error,
    },
    #[error("store format version {found} is not supported (expected version {expected})")]
    Version { expected: u32, found: u32 },
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("method not in store: {0}")]
    UnknownMethod(MethodId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Callers,
    Callees,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub format_version: u32,
    pub commit_id: String,
    pub tool_version: String,
    pub nodes: usize,
    pub edges: usize,
    pub stats: BuildStats,
    pub graph_sha256: String,
    pub bodies_sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    class_fqn: String,
    method_name: String,
    arity: u32,
    file_path: String,
    span: (u32, u32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    varargs: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_spans: Vec<(u32, u32)>,
    body: (u64, u64),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Record {
    Node(NodeRecord),
    Edge(usize, usize),
}

pub struct GraphStore {
    graph: CallGraph,
    commit_id: String,
    reverse: BTreeSet<(MethodId, MethodId)>,
    caching: bool,
    cache: Mutex<HashMap<(MethodId, Direction), Vec<MethodId>>>,
    visit_log: Mutex<Vec<MethodId>>,
}

impl std::fmt::Debug for GraphStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphStore")
            .field("commit_id", &self.commit_id)
            .field("nodes", &self.graph.nodes.len())
            .field("edges", &self.graph.edges.len())
            .finish()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        error: source,
    }
}

impl GraphStore {
    pub fn new(graph: CallGraph, commit_id: &str) -> Self {
        let reverse = graph
            .edges
            .iter()
            .map(|(a, b)| (b.clone(), a.clone()))
            .collect();
        Self {
            graph,
            commit_id: commit_id.to_string(),
            reverse,
            caching: true,
            cache: Mutex::new(HashMap::new()),
            visit_log: Mutex::new(Vec::new()),
        }
    }

    /// Disables the neighbor cache; results must not change.
    pub fn without_cache(mut self) -> Self {
        self.caching = false;
        self
    }

    pub fn graph(&self) -> &CallGraph {
        &self.graph
    }

    pub fn commit_id(&self) -> &str {
        &self.commit_id
    }

    pub fn contains(&self, id: &MethodId) -> bool {
        self.graph.nodes.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &MethodId> {
        self.graph.nodes.keys()
    }

    /// Full node for `id`; every call is recorded in the visit log.
    pub fn lookup(&self, id: &MethodId) -> Option<&MethodNode> {
        self.visit_log.lock().unwrap().push(id.clone());
        self.graph.nodes.get(id)
    }

    pub fn visit_log(&self) -> Vec<MethodId> {
        self.visit_log.lock().unwrap().clone()
    }

    fn adjacent(set: &BTreeSet<(MethodId, MethodId)>, id: &MethodId) -> Vec<MethodId> {
        let lo = (id.clone(), MethodId::new("", "", 0, ""));
        set.range(lo..)
            .take_while(|(a, _)| a == id)
            .map(|(_, b)| b.clone())
            .collect()
    }

    fn compute(&self, id: &MethodId, direction: Direction) -> Vec<MethodId> {
        let mut out: Vec<MethodId> = match direction {
            Direction::Callees => Self::adjacent(&self.graph.edges, id),
            Direction::Callers => Self::adjacent(&self.reverse, id),
            Direction::Both => {
                let mut v = Self::adjacent(&self.graph.edges, id);
                v.extend(Self::adjacent(&self.reverse, id));
                v
            }
        };
        out.sort();
        out.dedup();
        out
    }

    /// Sorted, deduplicated adjacency of `id`.
    pub fn neighbors(&self, id: &MethodId, direction: Direction) -> Result<Vec<MethodId>, StoreError> {
        if !self.contains(id) {
            return Err(StoreError::UnknownMethod(id.clone()));
        }
        if !self.caching {
            return Ok(self.compute(id, direction));
        }
        let key = (id.clone(), direction);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let fresh = self.compute(id, direction);
        self.cache.lock().unwrap().insert(key, fresh.clone());
        Ok(fresh)
    }

    /// Indexed methods with exactly this name, in id order.
    pub fn find_by_name(&self, method_name: &str) -> Vec<MethodId> {
        self.graph
            .nodes
            .keys()
            .filter(|id| id.method_name == method_name)
            .cloned()
            .collect()
    }

    fn encode(&self) -> (Vec<u8>, Vec<u8>) {
        let mut idx = Vec::new();
        let mut bodies = Vec::new();
        let header = Header {
            format: "crashctx-graph".into(),
            version: FORMAT_VERSION,
        };
        writeln!(idx, "{}", serde_json::to_string(&header).unwrap()).unwrap();
        let mut position = HashMap::new();
        for (i, node) in self.graph.nodes.values().enumerate() {
            position.insert(&node.id, i);
            let offset = bodies.len() as u64;
            bodies.extend_from_slice(node.body_text.as_bytes());
            let rec = Record::Node(NodeRecord {
                class_fqn: node.id.class_fqn.clone(),
                method_name: node.id.method_name.clone(),
                arity: node.id.arity,
                file_path: node.id.file_path.clone(),
                span: node.span,
                doc: node.doc_text.clone(),
                varargs: node.varargs,
                extra_spans: node.extra_spans.clone(),
                body: (offset, node.body_text.len() as u64),
            });
            writeln!(idx, "{}", serde_json::to_string(&rec).unwrap()).unwrap();
        }
        for (a, b) in &self.graph.edges {
            let rec = Record::Edge(position[a], position[b]);
            writeln!(idx, "{}", serde_json::to_string(&rec).unwrap()).unwrap();
        }
        (idx, bodies)
    }

    pub fn meta(&self) -> StoreMeta {
        let (idx, bodies) = self.encode();
        self.meta_for(&idx, &bodies)
    }

    fn meta_for(&self, idx: &[u8], bodies: &[u8]) -> StoreMeta {
        StoreMeta {
            format_version: FORMAT_VERSION,
            commit_id: self.commit_id.clone(),
            tool_version: TOOL_VERSION.to_string(),
            nodes: self.graph.nodes.len(),
            edges: self.graph.edges.len(),
            stats: self.graph.stats,
            graph_sha256: sha256_hex(idx),
            bodies_sha256: sha256_hex(bodies),
        }
    }

    /// Writes the store into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<StoreMeta, StoreError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let (idx, bodies) = self.encode();
        let meta = self.meta_for(&idx, &bodies);
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io_err(&path))
        };
        write(GRAPH_FILE, &idx)?;
        write(BODIES_FILE, &bodies)?;
        write(META_FILE, toml::to_string(&meta).unwrap().as_bytes())?;
        Ok(meta)
    }

    pub fn read_meta(dir: &Path) -> Result<StoreMeta, StoreError> {
        let path = dir.join(META_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let raw: toml::Value =
            toml::from_str(&text).map_err(|e| StoreError::Corrupt(format!("meta: {e}")))?;
        let found = raw
            .get("format_version")
            .and_then(toml::Value::as_integer)
            .ok_or_else(|| StoreError::Corrupt("meta: format_version missing".into()))?;
        if found != i64::from(FORMAT_VERSION) {
            return Err(StoreError::Version {
                expected: FORMAT_VERSION,
                found: found.try_into().unwrap_or(u32::MAX),
            });
        }
        toml::from_str(&text).map_err(|e| StoreError::Corrupt(format!("meta: {e}")))
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let meta = Self::read_meta(dir)?;
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read(&path).map_err(io_err(&path))
        };
        let idx = read(GRAPH_FILE)?;
        let bodies = read(BODIES_FILE)?;
        if sha256_hex(&idx) != meta.graph_sha256 {
            return Err(StoreError::Corrupt(format!("{GRAPH_FILE} checksum mismatch")));
        }
        if sha256_hex(&bodies) != meta.bodies_sha256 {
            return Err(StoreError::Corrupt(format!("{BODIES_FILE} checksum mismatch")));
        }
        let mut lines = idx.lines();
        let header: Header = match lines.next() {
            Some(Ok(l)) => serde_json::from_str(&l)
                .map_err(|e| StoreError::Corrupt(format!("header: {e}")))?,
            _ => return Err(StoreError::Corrupt("empty graph index".into())),
        };
        if header.version != FORMAT_VERSION {
            return Err(StoreError::Version {
                expected: FORMAT_VERSION,
                found: header.version,
            });
        }
        let mut ids = Vec::new();
        let mut graph = CallGraph {
            stats: meta.stats,
            ..CallGraph::default()
        };
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| StoreError::Corrupt(e.to_string()))?;
            let rec: Record = serde_json::from_str(&line)
                .map_err(|e| StoreError::Corrupt(format!("{GRAPH_FILE} line {}: {e}", n + 2)))?;
            match rec {
                Record::Node(r) => {
                    let (off, len) = (r.body.0 as usize, r.body.1 as usize);
                    let slice = off
                        .checked_add(len)
                        .and_then(|end| bodies.get(off..end))
                        .ok_or_else(|| StoreError::Corrupt(format!("body range out of bounds at line {}", n + 2)))?;
                    let body_text = String::from_utf8(slice.to_vec())
                        .map_err(|_| StoreError::Corrupt("body is not UTF-8".into()))?;
                    let id = MethodId::new(&r.class_fqn, &r.method_name, r.arity, &r.file_path);
                    ids.push(id.clone());
                    graph.nodes.insert(
                        id.clone(),
                        MethodNode {
                            id,
                            body_text,
                            span: r.span,
                            doc_text: r.doc,
                            varargs: r.varargs,
                            extra_spans: r.extra_spans,
                        },
                    );
                }
                Record::Edge(a, b) => {
                    let (Some(a), Some(b)) = (ids.get(a), ids.get(b)) else {
                        return Err(StoreError::Corrupt(format!("edge endpoint out of range at line {}", n + 2)));
                    };
                    graph.edges.insert((a.clone(), b.clone()));
                }
            }
        }
        if graph.nodes.len() != meta.nodes || graph.edges.len() != meta.edges {
            return Err(StoreError::Corrupt("record counts differ from meta".into()));
        }
        Ok(Self::new(graph, &meta.commit_id))
    }
}

/// SHA-256 over the store's three files, in a fixed order.
pub fn content_hash(dir: &Path) -> Result<String, StoreError> {
    let mut hasher = Sha256::new();
    for name in [GRAPH_FILE, BODIES_FILE, META_FILE] {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
