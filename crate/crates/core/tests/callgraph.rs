use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crashctx_core::ingest::extract_stack_traces;
use crashctx_core::jindex::{build_call_graph, map_frame, parse_tree, CallGraph, MethodId};
use crashctx_core::store::{content_hash, Direction, GraphStore};
use proptest::prelude::*;

const DECLARATIONS: &[&str] = &[
    "com.acme.app.App#main/1",
    "com.acme.app.App#ping/1",
    "com.acme.app.App#pong/1",
    "com.acme.app.Metrics#record/0",
    "com.acme.app.Metrics#record/1",
    "com.acme.app.Metrics#record/2",
    "com.acme.app.Metrics#log/1",
    "com.acme.app.Metrics#total/0",
    "com.acme.app.Report#render/1",
    "com.acme.app.Report#format/1",
    "com.acme.app.Service#<init>/1",
    "com.acme.app.Service#load/0",
    "com.acme.app.Service#score/1",
    "com.acme.app.Worker#read/1",
    "com.acme.app.Worker#loop/1",
    "com.acme.core.Graph#add/1",
    "com.acme.core.Graph#add/2",
    "com.acme.core.Graph#size/0",
    "com.acme.core.Graph#fact/1",
    "com.acme.core.Graph$Builder#with/1",
    "com.acme.core.Graph$Builder#build/0",
    "com.acme.core.Node#<init>/1",
    "com.acme.core.Node#<init>/2",
    "com.acme.core.Node#name/0",
    "com.acme.core.Node#depth/0",
    "com.acme.core.util.Checks#notNull/2",
    "com.acme.core.util.Checks#notEmpty/2",
    "com.acme.core.util.Checks#fail/1",
    "com.acme.core.util.Strings#<init>/0",
    "com.acme.core.util.Strings#isEmpty/1",
    "com.acme.core.util.Strings#trim/1",
    "com.acme.core.util.Strings#join/2",
    "com.acme.io.Buffer#<init>/1",
    "com.acme.io.Buffer#fill/0",
    "com.acme.io.Buffer#refresher/0",
    "com.acme.io.Buffer#flush/0",
    "com.acme.io.Buffer$Cursor#reset/0",
    "com.acme.io.FileReader#<init>/1",
    "com.acme.io.FileReader#read/1",
    "com.acme.io.FileReader#load/0",
    "com.acme.io.Reader#read/1",
    "com.acme.io.Reader#readAll/0",
];

const EDGES: &[(&str, &str)] = &[
    ("com.acme.core.Node#<init>/2", "com.acme.core.Node#<init>/1"),
    ("com.acme.core.Node#depth/0", "com.acme.core.Node#depth/0"),
    ("com.acme.core.Graph#add/2", "com.acme.core.Node#<init>/2"),
    ("com.acme.core.Graph#add/2", "com.acme.core.Graph#add/1"),
    ("com.acme.core.Graph#fact/1", "com.acme.core.Graph#fact/1"),
    ("com.acme.core.Graph$Builder#with/1", "com.acme.core.Graph#add/1"),
    ("com.acme.core.util.Strings#trim/1", "com.acme.core.util.Strings#isEmpty/1"),
    ("com.acme.core.util.Strings#join/2", "com.acme.core.util.Strings#isEmpty/1"),
    ("com.acme.core.util.Checks#notEmpty/2", "com.acme.core.util.Checks#notNull/2"),
    ("com.acme.core.util.Checks#notEmpty/2", "com.acme.core.util.Strings#isEmpty/1"),
    ("com.acme.core.util.Checks#notEmpty/2", "com.acme.core.util.Checks#fail/1"),
    ("com.acme.core.util.Checks#fail/1", "com.acme.core.util.Strings#join/2"),
    ("com.acme.io.Reader#readAll/0", "com.acme.io.Reader#read/1"),
    ("com.acme.io.FileReader#<init>/1", "com.acme.core.util.Checks#notEmpty/2"),
    ("com.acme.io.FileReader#read/1", "com.acme.io.FileReader#load/0"),
    ("com.acme.io.FileReader#read/1", "com.acme.core.util.Strings#trim/1"),
    ("com.acme.io.Buffer#fill/0", "com.acme.io.Reader#read/1"),
    ("com.acme.io.Buffer#refresher/0", "com.acme.io.Buffer#flush/0"),
    ("com.acme.io.Buffer#flush/0", "com.acme.io.Buffer$Cursor#reset/0"),
    ("com.acme.io.Buffer$Cursor#reset/0", "com.acme.io.Buffer#flush/0"),
    ("com.acme.app.Service#<init>/1", "com.acme.core.Graph$Builder#with/1"),
    ("com.acme.app.Service#<init>/1", "com.acme.core.Graph$Builder#build/0"),
    ("com.acme.app.Service#<init>/1", "com.acme.io.Buffer#<init>/1"),
    ("com.acme.app.Service#<init>/1", "com.acme.io.FileReader#<init>/1"),
    ("com.acme.app.Service#load/0", "com.acme.io.Buffer#fill/0"),
    ("com.acme.app.Service#load/0", "com.acme.core.Graph#add/2"),
    ("com.acme.app.Service#load/0", "com.acme.core.Node#<init>/1"),
    ("com.acme.app.Service#load/0", "com.acme.core.Graph#size/0"),
    ("com.acme.app.Service#score/1", "com.acme.core.Graph#fact/1"),
    ("com.acme.app.Service#score/1", "com.acme.core.Node#<init>/1"),
    ("com.acme.app.Service#score/1", "com.acme.core.Node#depth/0"),
    ("com.acme.app.App#main/1", "com.acme.app.Service#<init>/1"),
    ("com.acme.app.App#main/1", "com.acme.app.Service#load/0"),
    ("com.acme.app.App#main/1", "com.acme.app.Service#score/1"),
    ("com.acme.app.App#main/1", "com.acme.app.App#ping/1"),
    ("com.acme.app.App#ping/1", "com.acme.app.App#pong/1"),
    ("com.acme.app.App#pong/1", "com.acme.app.App#ping/1"),
    ("com.acme.app.Metrics#record/0", "com.acme.app.Metrics#record/1"),
    ("com.acme.app.Metrics#record/1", "com.acme.app.Metrics#record/2"),
    ("com.acme.app.Metrics#record/2", "com.acme.app.Metrics#log/1"),
    ("com.acme.app.Worker#read/1", "com.acme.app.Metrics#record/1"),
    ("com.acme.app.Worker#read/1", "com.acme.app.Metrics#record/0"),
    ("com.acme.app.Worker#loop/1", "com.acme.io.Reader#readAll/0"),
    ("com.acme.app.Worker#loop/1", "com.acme.app.Worker#read/1"),
    ("com.acme.app.Report#render/1", "com.acme.core.util.Checks#notNull/2"),
    ("com.acme.app.Report#render/1", "com.acme.app.Metrics#record/0"),
    ("com.acme.app.Report#render/1", "com.acme.core.util.Strings#join/2"),
    ("com.acme.app.Report#render/1", "com.acme.app.Report#format/1"),
    ("com.acme.app.Report#render/1", "com.acme.app.Metrics#total/0"),
];

/// Every invocation site: caller, callee, argument count, receiver hint, line.
const SITES: &[(&str, &str, u32, &str, u32)] = &[
    ("com.acme.app.App#main/1", "<init>", 1, "Service", 5),
    ("com.acme.app.App#main/1", "load", 0, "Service", 6),
    ("com.acme.app.App#main/1", "println", 1, "", 7),
    ("com.acme.app.App#main/1", "score", 1, "Service", 7),
    ("com.acme.app.App#main/1", "ping", 1, "", 8),
    ("com.acme.app.App#ping/1", "pong", 1, "", 13),
    ("com.acme.app.App#pong/1", "ping", 1, "", 18),
    ("com.acme.app.Metrics#record/0", "record", 1, "", 7),
    ("com.acme.app.Metrics#record/1", "record", 2, "", 11),
    ("com.acme.app.Metrics#record/2", "log", 1, "", 16),
    ("com.acme.app.Report#render/1", "notNull", 2, "Checks", 10),
    ("com.acme.app.Report#render/1", "record", 0, "Metrics", 11),
    ("com.acme.app.Report#render/1", "join", 3, "Strings", 12),
    ("com.acme.app.Report#render/1", "format", 1, "", 12),
    ("com.acme.app.Report#render/1", "total", 0, "Metrics", 12),
    ("com.acme.app.Report#format/1", "valueOf", 1, "String", 16),
    ("com.acme.app.Service#<init>/1", "<init>", 0, "Graph.Builder", 13),
    ("com.acme.app.Service#<init>/1", "with", 1, "Graph.Builder", 13),
    ("com.acme.app.Service#<init>/1", "build", 0, "", 13),
    ("com.acme.app.Service#<init>/1", "<init>", 1, "Buffer", 14),
    ("com.acme.app.Service#<init>/1", "<init>", 1, "FileReader", 14),
    ("com.acme.app.Service#load/0", "fill", 0, "Buffer", 18),
    ("com.acme.app.Service#load/0", "add", 2, "Graph", 19),
    ("com.acme.app.Service#load/0", "<init>", 1, "Node", 19),
    ("com.acme.app.Service#load/0", "size", 0, "Graph", 20),
    ("com.acme.app.Service#score/1", "fact", 1, "Graph", 24),
    ("com.acme.app.Service#score/1", "<init>", 1, "Node", 24),
    ("com.acme.app.Service#score/1", "depth", 0, "Node", 24),
    ("com.acme.app.Worker#read/1", "record", 1, "Worker", 8),
    ("com.acme.app.Worker#read/1", "record", 0, "Metrics", 9),
    ("com.acme.app.Worker#read/1", "toString", 1, "Integer", 10),
    ("com.acme.app.Worker#loop/1", "readAll", 0, "Reader", 14),
    ("com.acme.app.Worker#loop/1", "read", 1, "", 15),
    ("com.acme.core.Graph#add/1", "add", 1, "List", 10),
    ("com.acme.core.Graph#add/2", "add", 1, "", 14),
    ("com.acme.core.Graph#add/2", "<init>", 2, "Node", 14),
    ("com.acme.core.Graph#size/0", "size", 0, "List", 18),
    ("com.acme.core.Graph#fact/1", "fact", 1, "", 22),
    ("com.acme.core.Graph$Builder#with/1", "add", 1, "Graph", 29),
    ("com.acme.core.Node#<init>/2", "<init>", 1, "Node", 12),
    ("com.acme.core.Node#depth/0", "depth", 0, "Node", 24),
    ("com.acme.core.util.Checks#notNull/2", "<init>", 1, "IllegalArgumentException", 6),
    ("com.acme.core.util.Checks#notEmpty/2", "notNull", 2, "", 11),
    ("com.acme.core.util.Checks#notEmpty/2", "isEmpty", 1, "Strings", 12),
    ("com.acme.core.util.Checks#notEmpty/2", "fail", 1, "", 13),
    ("com.acme.core.util.Checks#fail/1", "<init>", 1, "IllegalStateException", 18),
    ("com.acme.core.util.Checks#fail/1", "join", 3, "Strings", 18),
    ("com.acme.core.util.Strings#isEmpty/1", "length", 0, "String", 8),
    ("com.acme.core.util.Strings#trim/1", "isEmpty", 1, "", 12),
    ("com.acme.core.util.Strings#trim/1", "trim", 0, "String", 15),
    ("com.acme.core.util.Strings#join/2", "<init>", 0, "StringBuilder", 19),
    ("com.acme.core.util.Strings#join/2", "isEmpty", 1, "", 21),
    ("com.acme.core.util.Strings#join/2", "append", 1, "StringBuilder", 22),
    ("com.acme.core.util.Strings#join/2", "append", 1, "", 22),
    ("com.acme.core.util.Strings#join/2", "toString", 0, "StringBuilder", 25),
    ("com.acme.io.Buffer#fill/0", "read", 1, "Reader", 13),
    ("com.acme.io.Buffer#fill/0", "get", 0, "Supplier", 14),
    ("com.acme.io.Buffer#refresher/0", "<init>", 0, "Runnable", 18),
    ("com.acme.io.Buffer#refresher/0", "flush", 0, "", 21),
    ("com.acme.io.Buffer#flush/0", "<init>", 0, "Cursor", 27),
    ("com.acme.io.Buffer#flush/0", "reset", 0, "Cursor", 27),
    ("com.acme.io.Buffer$Cursor#reset/0", "flush", 0, "", 35),
    ("com.acme.io.FileReader#<init>/1", "notEmpty", 2, "Checks", 10),
    ("com.acme.io.FileReader#read/1", "load", 0, "", 16),
    ("com.acme.io.FileReader#read/1", "trim", 1, "Strings", 17),
    ("com.acme.io.FileReader#read/1", "substring", 2, "", 17),
    ("com.acme.io.Reader#readAll/0", "read", 1, "", 7),
];

/// Frame text and the method it must map to; `-` means unmapped.
const FRAMES: &[(&str, &str)] = &[
    ("com.acme.app.App.main(App.java:5)", "com.acme.app.App#main/1"),
    ("com.acme.app.App.ping(App.java:12)", "com.acme.app.App#ping/1"),
    ("com.acme.app.App.pong(App.java:18)", "com.acme.app.App#pong/1"),
    ("com.acme.app.Metrics.record(Metrics.java:7)", "com.acme.app.Metrics#record/0"),
    ("com.acme.app.Metrics.record(Metrics.java:11)", "com.acme.app.Metrics#record/1"),
    ("com.acme.app.Metrics.record(Metrics.java:15)", "com.acme.app.Metrics#record/2"),
    ("com.acme.app.Metrics.record(Metrics.java:16)", "com.acme.app.Metrics#record/2"),
    ("com.acme.app.Metrics.log(Metrics.java:19)", "com.acme.app.Metrics#log/1"),
    ("com.acme.app.Metrics.total(Metrics.java:23)", "com.acme.app.Metrics#total/0"),
    ("com.acme.app.Report.render(Report.java:10)", "com.acme.app.Report#render/1"),
    ("com.acme.app.Report.render(Report.java:12)", "com.acme.app.Report#render/1"),
    ("com.acme.app.Report.format(Report.java:16)", "com.acme.app.Report#format/1"),
    ("com.acme.app.Service.<init>(Service.java:13)", "com.acme.app.Service#<init>/1"),
    ("com.acme.app.Service.<init>(Service.java:14)", "com.acme.app.Service#<init>/1"),
    ("com.acme.app.Service.load(Service.java:19)", "com.acme.app.Service#load/0"),
    ("com.acme.app.Service.score(Service.java:24)", "com.acme.app.Service#score/1"),
    ("com.acme.app.Worker.read(Worker.java:8)", "com.acme.app.Worker#read/1"),
    ("com.acme.app.Worker.loop(Worker.java:14)", "com.acme.app.Worker#loop/1"),
    ("com.acme.core.Graph.add(Graph.java:10)", "com.acme.core.Graph#add/1"),
    ("com.acme.core.Graph.add(Graph.java:14)", "com.acme.core.Graph#add/2"),
    ("com.acme.core.Graph.size(Graph.java:18)", "com.acme.core.Graph#size/0"),
    ("com.acme.core.Graph.fact(Graph.java:22)", "com.acme.core.Graph#fact/1"),
    ("com.acme.core.Graph$Builder.with(Graph.java:29)", "com.acme.core.Graph$Builder#with/1"),
    ("com.acme.core.Graph$Builder.build(Graph.java:34)", "com.acme.core.Graph$Builder#build/0"),
    ("com.acme.core.Node.<init>(Node.java:8)", "com.acme.core.Node#<init>/1"),
    ("com.acme.core.Node.<init>(Node.java:12)", "com.acme.core.Node#<init>/2"),
    ("com.acme.core.Node.<init>(Node.java:13)", "com.acme.core.Node#<init>/2"),
    ("com.acme.core.Node.name(Node.java:17)", "com.acme.core.Node#name/0"),
    ("com.acme.core.Node.depth(Node.java:24)", "com.acme.core.Node#depth/0"),
    ("com.acme.core.util.Checks.notNull(Checks.java:6)", "com.acme.core.util.Checks#notNull/2"),
    ("com.acme.core.util.Checks.notEmpty(Checks.java:12)", "com.acme.core.util.Checks#notEmpty/2"),
    ("com.acme.core.util.Checks.fail(Checks.java:18)", "com.acme.core.util.Checks#fail/1"),
    ("com.acme.core.util.Strings.isEmpty(Strings.java:8)", "com.acme.core.util.Strings#isEmpty/1"),
    ("com.acme.core.util.Strings.trim(Strings.java:15)", "com.acme.core.util.Strings#trim/1"),
    ("com.acme.core.util.Strings.join(Strings.java:22)", "com.acme.core.util.Strings#join/2"),
    ("com.acme.core.util.Strings.<init>(Strings.java:4)", "com.acme.core.util.Strings#<init>/0"),
    ("com.acme.io.Buffer.<init>(Buffer.java:9)", "com.acme.io.Buffer#<init>/1"),
    ("com.acme.io.Buffer.fill(Buffer.java:14)", "com.acme.io.Buffer#fill/0"),
    ("com.acme.io.Buffer.refresher(Buffer.java:18)", "com.acme.io.Buffer#refresher/0"),
    ("com.acme.io.Buffer.flush(Buffer.java:27)", "com.acme.io.Buffer#flush/0"),
    ("com.acme.io.Buffer$Cursor.reset(Buffer.java:35)", "com.acme.io.Buffer$Cursor#reset/0"),
    ("com.acme.io.FileReader.<init>(FileReader.java:10)", "com.acme.io.FileReader#<init>/1"),
    ("com.acme.io.FileReader.read(FileReader.java:17)", "com.acme.io.FileReader#read/1"),
    ("com.acme.io.FileReader.load(FileReader.java:21)", "com.acme.io.FileReader#load/0"),
    ("com.acme.io.Reader.read(Reader.java:4)", "com.acme.io.Reader#read/1"),
    ("com.acme.io.Reader.readAll(Reader.java:7)", "com.acme.io.Reader#readAll/0"),
    ("com.acme.io.Buffer.lambda$fill$0(Buffer.java:13)", "com.acme.io.Buffer#fill/0"),
    ("com.acme.io.Buffer$1.run(Buffer.java:21)", "com.acme.io.Buffer#refresher/0"),
    ("com.acme.app.Metrics.record(Metrics.java:99)", "com.acme.app.Metrics#record/0"),
    ("com.acme.app.Metrics.reset(Metrics.java:7)", "-"),
    ("java.lang.String.trim(String.java:10)", "-"),
];

fn fixture_root() -> PathBuf {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/callgraph")).to_path_buf()
}

/// `pkg.Outer$Inner#name/arity` to a full id; the file follows the outer class.
fn id(short: &str) -> MethodId {
    let (class, rest) = short.split_once('#').unwrap();
    let (name, arity) = rest.rsplit_once('/').unwrap();
    let outer = class.split('$').next().unwrap();
    let file = format!("src/main/java/{}.java", outer.replace('.', "/"));
    MethodId::new(class, name, arity.parse().unwrap(), &file)
}

fn build() -> CallGraph {
    build_call_graph(&parse_tree(&fixture_root(), &[]).unwrap())
}

#[test]
fn declarations_match_oracle() {
    check_declarations_match_oracle();
}

pub fn check_declarations_match_oracle() {
    let graph = build();
    let want: BTreeSet<MethodId> = DECLARATIONS.iter().map(|s| id(s)).collect();
    let got: BTreeSet<MethodId> = graph.nodes.keys().cloned().collect();
    assert_eq!(want.len(), DECLARATIONS.len());
    assert_eq!(got, want);
}

#[test]
fn edges_match_oracle() {
    check_edges_match_oracle();
}

pub fn check_edges_match_oracle() {
    let graph = build();
    let want: BTreeSet<(MethodId, MethodId)> = EDGES.iter().map(|(a, b)| (id(a), id(b))).collect();
    assert_eq!(want.len(), EDGES.len());
    let missing: Vec<_> = want.difference(&graph.edges).collect();
    let extra: Vec<_> = graph.edges.difference(&want).collect();
    assert!(missing.is_empty() && extra.is_empty(), "missing {missing:#?}\nextra {extra:#?}");
}

#[test]
fn sites_match_oracle() {
    let parsed = parse_tree(&fixture_root(), &[]).unwrap();
    let mut got: Vec<_> = parsed
        .iter()
        .flat_map(|f| &f.sites)
        .map(|s| (s.caller.clone(), s.callee.clone(), s.argc, s.hint.clone(), s.line))
        .collect();
    let mut want: Vec<_> = SITES
        .iter()
        .map(|&(c, callee, argc, hint, line)| {
            let hint = (!hint.is_empty()).then(|| hint.to_string());
            (id(c), callee.to_string(), argc, hint, line)
        })
        .collect();
    got.sort();
    want.sort();
    let missing: Vec<_> = want.iter().filter(|s| !got.contains(s)).collect();
    let extra: Vec<_> = got.iter().filter(|s| !want.contains(s)).collect();
    assert!(missing.is_empty() && extra.is_empty(), "missing {missing:#?}\nextra {extra:#?}");
}

#[test]
fn frame_lookup_table() {
    let graph = build();
    assert!(FRAMES.len() >= 50);
    let mut bad = Vec::new();
    for (frame, want) in FRAMES {
        let traces = extract_stack_traces(&format!("java.lang.IllegalStateException: x\n\tat {frame}\n"));
        let parsed = &traces[0].frames[0];
        let got = map_frame(parsed, &graph);
        let want = (*want != "-").then(|| id(want));
        if got != want {
            bad.push(format!("{frame}: got {got:?}"));
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn store_hash_is_stable_across_rebuilds() {
    check_store_hash_is_stable_across_rebuilds();
}

pub fn check_store_hash_is_stable_across_rebuilds() {
    let hashes: Vec<String> = (0..3)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            GraphStore::new(build(), "c0ffee").save(dir.path()).unwrap();
            content_hash(dir.path()).unwrap()
        })
        .collect();
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(hashes[1], hashes[2]);
}

#[test]
fn store_round_trip_preserves_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build();
    GraphStore::new(graph.clone(), "c0ffee").save(dir.path()).unwrap();
    let loaded = GraphStore::load(dir.path()).unwrap();
    assert_eq!(loaded.graph(), &graph);
}

proptest! {
    #[test]
    fn neighbors_match_edge_scan(picks in proptest::collection::vec((0usize..42, 0u8..3), 1..40), cached in any::<bool>()) {
        let graph = build();
        let ids: Vec<MethodId> = graph.nodes.keys().cloned().collect();
        let edges = graph.edges.clone();
        let store = GraphStore::new(graph, "x");
        let store = if cached { store } else { store.without_cache() };
        for (i, d) in picks {
            let m = &ids[i % ids.len()];
            let dir = [Direction::Callers, Direction::Callees, Direction::Both][d as usize];
            let mut want: Vec<MethodId> = edges
                .iter()
                .filter_map(|(a, b)| match dir {
                    Direction::Callees if a == m => Some(b.clone()),
                    Direction::Callers if b == m => Some(a.clone()),
                    Direction::Both if a == m => Some(b.clone()),
                    Direction::Both if b == m => Some(a.clone()),
                    _ => None,
                })
                .collect();
            want.sort();
            want.dedup();
            prop_assert_eq!(store.neighbors(m, dir).unwrap(), want);
        }
    }
}
