//! Call-graph construction and frame mapping.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::extract::{InvocationSite, ParsedFile, TypeInfo};
use super::{MethodId, MethodNode};
use crate::ingest::StackFrame;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub files: usize,
    pub skipped_files: usize,
    pub sites: usize,
    pub resolved_sites: usize,
    pub unresolved_sites: usize,
    /// Sites that resolved to more than one declaration.
    pub ambiguous_sites: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: BTreeMap<MethodId, MethodNode>,
    pub edges: BTreeSet<(MethodId, MethodId)>,
    pub stats: BuildStats,
}

impl CallGraph {
    pub fn node(&self, id: &MethodId) -> Option<&MethodNode> {
        self.nodes.get(id)
    }

    pub fn callees(&self, id: &MethodId) -> Vec<MethodId> {
        self.edges
            .range((id.clone(), min_id())..)
            .take_while(|(a, _)| a == id)
            .map(|(_, b)| b.clone())
            .collect()
    }

    pub fn callers(&self, id: &MethodId) -> Vec<MethodId> {
        self.edges
            .iter()
            .filter(|(_, b)| b == id)
            .map(|(a, _)| a.clone())
            .collect()
    }
}

fn min_id() -> MethodId {
    MethodId::new("", "", 0, "")
}

struct TypeIndex<'a> {
    types: Vec<&'a TypeInfo>,
    by_simple: HashMap<&'a str, Vec<usize>>,
    by_fqn: HashMap<&'a str, usize>,
    files: HashMap<&'a str, &'a ParsedFile>,
}

impl<'a> TypeIndex<'a> {
    fn new(parsed: &'a [ParsedFile]) -> Self {
        let mut index = TypeIndex {
            types: Vec::new(),
            by_simple: HashMap::new(),
            by_fqn: HashMap::new(),
            files: HashMap::new(),
        };
        for file in parsed {
            index.files.insert(file.path.as_str(), file);
            for t in &file.types {
                let i = index.types.len();
                index.types.push(t);
                index.by_simple.entry(t.simple()).or_default().push(i);
                index.by_fqn.entry(t.fqn.as_str()).or_insert(i);
            }
        }
        index
    }

    /// Project types a source-level name can denote from `file`.
    fn resolve(&self, name: &str, file: Option<&ParsedFile>) -> Vec<usize> {
        let simple = name.rsplit('.').next().unwrap_or(name);
        let Some(candidates) = self.by_simple.get(simple) else {
            return Vec::new();
        };
        let suffix = format!(".{name}");
        let matching: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| {
                let dotted = self.types[i].dotted();
                dotted == name || dotted.ends_with(&suffix)
            })
            .collect();
        if matching.len() <= 1 {
            return matching;
        }
        let Some(file) = file else {
            return matching;
        };
        let imported: Vec<usize> = matching
            .iter()
            .copied()
            .filter(|&i| {
                let t = self.types[i];
                let dotted = t.dotted();
                file.imports.iter().any(|imp| match imp.strip_suffix(".*") {
                    Some(pkg) => t.package == pkg,
                    None => dotted == *imp || dotted.starts_with(&format!("{imp}.")),
                })
            })
            .collect();
        if !imported.is_empty() {
            return imported;
        }
        let local: Vec<usize> = matching
            .iter()
            .copied()
            .filter(|&i| self.types[i].package == file.package)
            .collect();
        if local.is_empty() {
            matching
        } else {
            local
        }
    }

    /// The given types plus all their transitive supertypes in the project.
    fn with_supertypes(&self, start: &[usize]) -> HashSet<&'a str> {
        let mut seen: HashSet<usize> = start.iter().copied().collect();
        let mut queue: VecDeque<usize> = start.iter().copied().collect();
        while let Some(i) = queue.pop_front() {
            let t = self.types[i];
            let file = self.files.get(t.file_path.as_str()).copied();
            for s in &t.supertypes {
                for j in self.resolve(s, file) {
                    if seen.insert(j) {
                        queue.push_back(j);
                    }
                }
            }
        }
        seen.into_iter().map(|i| self.types[i].fqn.as_str()).collect()
    }

    fn package_of(&self, class_fqn: &str) -> Option<&'a str> {
        self.by_fqn.get(class_fqn).map(|&i| self.types[i].package.as_str())
    }
}

fn enclosing_classes(fqn: &str) -> Vec<&str> {
    fqn.char_indices()
        .filter(|(_, c)| *c == '$')
        .map(|(i, _)| &fqn[..i])
        .collect()
}

fn resolve_site<'g>(
    site: &InvocationSite,
    candidates: &[&'g MethodNode],
    types: &TypeIndex<'_>,
) -> Vec<&'g MethodNode> {
    let caller_file = types.files.get(site.caller.file_path.as_str()).copied();
    let caller_class = site.caller.class_fqn.as_str();
    if let Some(hint) = &site.hint {
        let resolved = types.resolve(hint, caller_file);
        if resolved.is_empty() {
            return Vec::new();
        }
        let allowed = types.with_supertypes(&resolved);
        return candidates
            .iter()
            .copied()
            .filter(|m| allowed.contains(m.id.class_fqn.as_str()))
            .collect();
    }
    let own: Vec<_> = candidates
        .iter()
        .copied()
        .filter(|m| m.id.class_fqn == caller_class)
        .collect();
    if !own.is_empty() {
        return own;
    }
    let mut scope_types: Vec<usize> = Vec::new();
    if let Some(&i) = types.by_fqn.get(caller_class) {
        scope_types.push(i);
    }
    for outer in enclosing_classes(caller_class) {
        if let Some(&i) = types.by_fqn.get(outer) {
            scope_types.push(i);
        }
    }
    let related = types.with_supertypes(&scope_types);
    let inherited: Vec<_> = candidates
        .iter()
        .copied()
        .filter(|m| related.contains(m.id.class_fqn.as_str()))
        .collect();
    if !inherited.is_empty() {
        return inherited;
    }
    let package = caller_file.map(|f| f.package.as_str()).unwrap_or("");
    let same_package: Vec<_> = candidates
        .iter()
        .copied()
        .filter(|m| types.package_of(&m.id.class_fqn).unwrap_or(m.id.package()) == package)
        .collect();
    if !same_package.is_empty() {
        return same_package;
    }
    candidates.to_vec()
}

/// Builds the call graph from every file's extraction output. Resolution is
/// by name and arity, narrowed by receiver type, then class, then package;
/// remaining ambiguity links to every survivor.
pub fn build_call_graph(parsed: &[ParsedFile]) -> CallGraph {
    let mut graph = CallGraph::default();
    graph.stats.files = parsed.len();
    for file in parsed {
        if file.skipped {
            graph.stats.skipped_files += 1;
            continue;
        }
        for m in &file.methods {
            graph.nodes.insert(m.id.clone(), m.clone());
        }
    }
    let types = TypeIndex::new(parsed);
    let mut by_name: HashMap<&str, Vec<&MethodNode>> = HashMap::new();
    for node in graph.nodes.values() {
        by_name.entry(node.id.method_name.as_str()).or_default().push(node);
    }
    let mut edges = BTreeSet::new();
    let mut stats = graph.stats;
    for site in parsed.iter().filter(|f| !f.skipped).flat_map(|f| &f.sites) {
        stats.sites += 1;
        let candidates: Vec<&MethodNode> = by_name
            .get(site.callee.as_str())
            .map(|v| v.iter().copied().filter(|m| m.accepts(site.argc)).collect())
            .unwrap_or_default();
        let targets = resolve_site(site, &candidates, &types);
        match targets.len() {
            0 => stats.unresolved_sites += 1,
            n => {
                stats.resolved_sites += 1;
                if n > 1 {
                    stats.ambiguous_sites += 1;
                }
            }
        }
        for t in targets {
            edges.insert((site.caller.clone(), t.id.clone()));
        }
    }
    graph.edges = edges;
    graph.stats = stats;
    graph
}

/// Drops anonymous-class suffixes: `a.B$1` and `a.B$1$2` become `a.B`.
pub fn normalize_class(class_fqn: &str) -> &str {
    let mut s = class_fqn;
    while let Some((head, tail)) = s.rsplit_once('$') {
        if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
            s = head;
        } else {
            break;
        }
    }
    s
}

/// `lambda$drain$0` names the method `drain`.
fn normalize_method(name: &str) -> &str {
    name.strip_prefix("lambda$")
        .and_then(|rest| rest.split('$').next())
        .filter(|m| !m.is_empty())
        .unwrap_or(name)
}

fn file_matches(id: &MethodId, file_name: &str) -> bool {
    id.file_path == file_name || id.file_path.ends_with(&format!("/{file_name}"))
}

/// Maps a stack frame to the indexed method it names: exact class, name and
/// in-span line first; for synthetic frames (anonymous classes, lambdas) the
/// method whose span holds the line; finally class and name alone.
pub fn map_frame(frame: &StackFrame, graph: &CallGraph) -> Option<MethodId> {
    let class = normalize_class(&frame.class_fqn);
    let method = normalize_method(&frame.method_name);
    let synthetic = class != frame.class_fqn || method != frame.method_name;
    let in_class: Vec<&MethodNode> = graph
        .nodes
        .range(MethodId::new(class, "", 0, "")..)
        .take_while(|(id, _)| id.class_fqn == class)
        .map(|(_, n)| n)
        .collect();
    let in_span = |n: &&&MethodNode| file_matches(&n.id, &frame.file_name) && n.contains_line(frame.line);
    if let Some(n) = in_class
        .iter()
        .filter(|n| n.id.method_name == method)
        .find(in_span)
    {
        return Some(n.id.clone());
    }
    if synthetic {
        if let Some(n) = in_class.iter().find(in_span) {
            return Some(n.id.clone());
        }
    }
    in_class
        .iter()
        .find(|n| n.id.method_name == method)
        .map(|n| n.id.clone())
}
