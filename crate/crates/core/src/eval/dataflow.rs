//! Variable data-flow graph for the CodeBLEU data-flow component.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::java::{tokenize, Kind, Node, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    ComesFrom,
    ComputedFrom,
}

/// One edge after renaming variables to positional indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowItem {
    pub var: usize,
    pub relation: Relation,
    pub parents: Vec<usize>,
}

impl FlowItem {
    pub fn new(var: usize, relation: Relation, parents: &[usize]) -> Self {
        Self {
            var,
            relation,
            parents: parents.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
struct VarTok<'s> {
    idx: usize,
    start: usize,
    end: usize,
    text: &'s str,
    /// An identifier outside a type position; only these define variables.
    defines: bool,
}

struct Edge {
    name: String,
    idx: usize,
    relation: Relation,
    parents: Vec<(String, usize)>,
}

type States = BTreeMap<String, BTreeSet<usize>>;

struct Flow<'s> {
    toks: Vec<VarTok<'s>>,
    edges: Vec<Edge>,
}

impl<'s> Flow<'s> {
    fn within(&self, start: usize, end: usize) -> &[VarTok<'s>] {
        let lo = self.toks.partition_point(|t| t.start < start);
        let hi = self.toks.partition_point(|t| t.end <= end).max(lo);
        &self.toks[lo..hi]
    }

    fn leaf(&mut self, t: &VarTok<'s>, states: &mut States) {
        let parents = match states.get(t.text) {
            Some(defs) => defs.iter().map(|&i| (t.text.to_string(), i)).collect(),
            None => {
                if t.defines {
                    states.insert(t.text.to_string(), BTreeSet::from([t.idx]));
                }
                Vec::new()
            }
        };
        self.edges.push(Edge {
            name: t.text.to_string(),
            idx: t.idx,
            relation: Relation::ComesFrom,
            parents,
        });
    }

    fn link(&mut self, targets: &[VarTok<'s>], sources: &[VarTok<'s>], relation: Relation, states: &mut States) {
        for t in targets {
            for s in sources {
                self.edges.push(Edge {
                    name: t.text.to_string(),
                    idx: t.idx,
                    relation,
                    parents: vec![(s.text.to_string(), s.idx)],
                });
            }
            states.insert(t.text.to_string(), BTreeSet::from([t.idx]));
        }
    }

    fn generic(&mut self, node: &Node, states: &mut States) {
        let mut cursor = node.start;
        for c in &node.children {
            let gap = self.within(cursor, c.start).to_vec();
            for t in &gap {
                self.leaf(t, states);
            }
            self.walk(c, states);
            cursor = cursor.max(c.end);
        }
        let tail = self.within(cursor, node.end).to_vec();
        for t in &tail {
            self.leaf(t, states);
        }
    }

    fn walk(&mut self, node: &Node, states: &mut States) {
        match node.kind {
            Kind::VariableDeclarator => {
                let name: Vec<_> = self
                    .within(node.start, node.end)
                    .iter()
                    .filter(|t| t.text == node.text())
                    .take(1)
                    .cloned()
                    .collect();
                match node.children.iter().find(|c| c.kind != Kind::Type) {
                    Some(value) => {
                        self.walk(value, states);
                        let sources = self.within(value.start, value.end).to_vec();
                        self.link(&name, &sources, Relation::ComesFrom, states);
                    }
                    None => {
                        for t in &name {
                            self.edges.push(Edge {
                                name: t.text.to_string(),
                                idx: t.idx,
                                relation: Relation::ComesFrom,
                                parents: Vec::new(),
                            });
                            states.insert(t.text.to_string(), BTreeSet::from([t.idx]));
                        }
                    }
                }
            }
            Kind::Assignment if node.children.len() == 2 => {
                let (left, right) = (&node.children[0], &node.children[1]);
                self.walk(right, states);
                let targets = self.within(left.start, left.end).to_vec();
                let sources = self.within(right.start, right.end).to_vec();
                self.link(&targets, &sources, Relation::ComputedFrom, states);
            }
            Kind::PrefixUpdate | Kind::PostfixUpdate => {
                let toks = self.within(node.start, node.end).to_vec();
                for t in &toks {
                    self.link(std::slice::from_ref(t), std::slice::from_ref(t), Relation::ComputedFrom, states);
                }
            }
            Kind::If if node.children.len() >= 2 => {
                self.walk(&node.children[0], states);
                let mut then_states = states.clone();
                self.walk(&node.children[1], &mut then_states);
                let mut else_states = states.clone();
                for c in &node.children[2..] {
                    self.walk(c, &mut else_states);
                }
                for (k, v) in then_states {
                    else_states.entry(k).or_default().extend(v);
                }
                *states = else_states;
            }
            Kind::While | Kind::Do => {
                for _ in 0..2 {
                    self.generic(node, states);
                }
            }
            Kind::For => {
                for c in &node.children {
                    self.walk(c, states);
                }
                if let Some(p) = node.children.iter().position(|c| c.kind == Kind::LocalVarDecl) {
                    for c in &node.children[p + 1..] {
                        self.walk(c, states);
                    }
                }
            }
            Kind::EnhancedFor => {
                let Some(d) = node.children.iter().position(|c| c.kind == Kind::VariableDeclarator) else {
                    return self.generic(node, states);
                };
                let name = self.within(node.children[d].start, node.children[d].end).to_vec();
                let rest = &node.children[d + 1..];
                for _ in 0..2 {
                    if let Some(iterable) = rest.first() {
                        self.walk(iterable, states);
                        let sources = self.within(iterable.start, iterable.end).to_vec();
                        self.link(&name, &sources, Relation::ComputedFrom, states);
                    }
                    for c in rest.iter().skip(1) {
                        self.walk(c, states);
                    }
                }
            }
            _ => self.generic(node, states),
        }
    }
}

fn type_ranges(root: &Node) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    root.walk(&mut |n| {
        if n.kind == Kind::Type {
            out.push((n.start, n.end));
        }
    });
    out
}

/// Variable name, relation and merged parents of one flow edge.
type Merged = (String, Relation, BTreeSet<(usize, String)>);

/// Data-flow edges of `root` (parsed from `src`), merged per token,
/// pruned to connected entries and renamed positionally.
pub fn normalized_dataflow(src: &str, root: &Node) -> Vec<FlowItem> {
    let types = type_ranges(root);
    let toks = tokenize(src)
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            matches!(
                t.kind,
                TokenKind::Ident
                    | TokenKind::IntLiteral
                    | TokenKind::FloatLiteral
                    | TokenKind::CharLiteral
                    | TokenKind::StringLiteral
                    | TokenKind::TextBlock
            )
        })
        .map(|(idx, t)| VarTok {
            idx,
            start: t.start,
            end: t.end,
            text: t.text,
            defines: t.kind == TokenKind::Ident && !types.iter().any(|&(s, e)| s <= t.start && t.end <= e),
        })
        .collect();
    let mut flow = Flow {
        toks,
        edges: Vec::new(),
    };
    flow.walk(root, &mut States::new());

    let mut merged: BTreeMap<usize, Merged> = BTreeMap::new();
    for e in flow.edges {
        let entry = merged
            .entry(e.idx)
            .or_insert_with(|| (e.name.clone(), e.relation, BTreeSet::new()));
        entry.2.extend(e.parents.into_iter().map(|(n, i)| (i, n)));
    }
    let mut keep = BTreeSet::new();
    for (idx, (_, _, parents)) in &merged {
        if !parents.is_empty() {
            keep.insert(*idx);
        }
        keep.extend(parents.iter().map(|p| p.0));
    }

    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    let mut number = |name: &str| {
        let next = names.len();
        *names.entry(name.to_string()).or_insert(next)
    };
    let mut out = Vec::new();
    for (idx, (name, relation, parents)) in merged {
        if !keep.contains(&idx) {
            continue;
        }
        let mut seen = BTreeSet::new();
        let parent_names: Vec<&String> = parents.iter().map(|p| &p.1).filter(|n| seen.insert(*n)).collect();
        let parents = parent_names.iter().map(|n| number(n)).collect();
        out.push(FlowItem {
            var: number(&name),
            relation,
            parents,
        });
    }
    out
}

/// Share of reference edges found in the hypothesis, each used once.
/// `None` when the reference has no edges.
pub fn dataflow_match(hypothesis: &[FlowItem], reference: &[FlowItem]) -> Option<f64> {
    if reference.is_empty() {
        return None;
    }
    let mut pool = hypothesis.to_vec();
    let mut hits = 0;
    for r in reference {
        if let Some(p) = pool.iter().position(|h| h == r) {
            pool.swap_remove(p);
            hits += 1;
        }
    }
    Some(hits as f64 / reference.len() as f64)
}
