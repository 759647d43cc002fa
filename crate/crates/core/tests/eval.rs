use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{TimeZone, Utc};
use crashctx_core::enhance::{EnhancedReport, Provenance, UNKNOWN};
use crashctx_core::eval::*;
use crashctx_core::ingest::{CrashReport, Priority, Status};
use crashctx_core::java::{parse_members, parse_statements, Node};
use crashctx_core::jindex::{MethodId, MethodNode};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Deserialize;

fn node(class: &str, method: &str, body: &str) -> MethodNode {
    MethodNode {
        id: MethodId::new(class, method, 0, &format!("{}.java", class.replace('.', "/"))),
        body_text: body.to_string(),
        span: (1, 1),
        doc_text: None,
        varargs: false,
        extra_spans: Vec::new(),
    }
}

fn corpus() -> Vec<MethodNode> {
    vec![
        node("d.Cache", "get", "return map.get(key);"),
        node("d.Cache", "put", "map.put(key, value); size = size + 1;"),
        node("d.Loader", "load", "File f = new File(path); return read(f);"),
        node("d.Loader", "parse", "if (line == null) throw new ParseException(line);"),
        node("d.Server", "start", "loader.load(path); cache.put(key, value);"),
    ]
}

fn score_of(list: &RankedList, class: &str, method: &str) -> f64 {
    list.ranked
        .iter()
        .find(|(id, _)| id.class_fqn == class && id.method_name == method)
        .unwrap()
        .1
}

#[test]
fn bm25_hand_table() {
    check_bm25_hand_table();
}

type HandTable<'a> = &'a [(&'a str, &'a [(&'a str, &'a str, f64)])];

pub fn check_bm25_hand_table() {
    let docs = corpus();
    let index = Bm25Index::build(&docs, Bm25Params::default()).unwrap();
    let table: HandTable = &[
        (
            "cache put key",
            &[
                ("d.Cache", "get", 1.2206685457769682),
                ("d.Cache", "put", 2.2659671311131904),
                ("d.Server", "start", 1.9372877225825005),
            ],
        ),
        ("null line parse", &[("d.Loader", "parse", 5.005552913079291)]),
        (
            "load file path",
            &[("d.Loader", "load", 3.510106789659245), ("d.Server", "start", 1.7364402923045157)],
        ),
        ("server", &[("d.Server", "start", 1.3748163029321456)]),
    ];
    for (query, expected) in table {
        let list = index.rank("Q", query);
        for doc in &docs {
            let want = expected
                .iter()
                .find(|e| e.0 == doc.id.class_fqn && e.1 == doc.id.method_name)
                .map_or(0.0, |e| e.2);
            let got = score_of(&list, &doc.id.class_fqn, &doc.id.method_name);
            assert!((got - want).abs() < 1e-9, "{query} {}: {got} vs {want}", doc.id);
        }
        assert!(list.ranked.windows(2).all(|w| w[0].1 >= w[1].1));
    }
    assert_eq!(index.rank("Q", "cache put key").ranked[0].0.method_name, "put");
}

#[test]
fn bm25_edge_cases() {
    check_bm25_edge_cases();
}

pub fn check_bm25_edge_cases() {
    let docs = corpus();
    let none = bm25_rank("Q", "zebra quartz", &docs, Bm25Params::default()).unwrap();
    assert!(none.ranked.iter().all(|(_, s)| *s == 0.0));
    let ids: Vec<_> = none.ranked.iter().map(|r| r.0.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let empty = bm25_rank("Q", "  ...  ", &docs, Bm25Params::default()).unwrap();
    assert!(empty.ranked.iter().all(|(_, s)| *s == 0.0));

    let one = [node("x.Y", "flush", "buffer.flush();")];
    let r = bm25_rank("Q", "flush the buffer", &one, Bm25Params::default()).unwrap();
    assert!(r.ranked[0].1 > 0.0);

    assert_eq!(bm25_rank("Q", "x", &[], Bm25Params::default()), Err(EvalError::Empty));
    assert!(bm25_rank("Q", "x", &docs, Bm25Params { k1: 0.0, b: 0.5 }).is_err());
    assert!(bm25_rank("Q", "x", &docs, Bm25Params { k1: 1.0, b: 1.5 }).is_err());
    let a = bm25_rank("Q", "key value", &docs, Bm25Params::default()).unwrap();
    let b = bm25_rank("Q", "key value", &docs, Bm25Params::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bm25_term_occurrence_is_monotone() {
    check_bm25_term_occurrence_is_monotone();
}

pub fn check_bm25_term_occurrence_is_monotone() {
    let docs = corpus();
    let index = Bm25Index::build(&docs, Bm25Params::default()).unwrap();
    let vocab = [
        "cache", "put", "key", "map", "get", "file", "path", "load", "line", "null", "parse", "server", "value",
        "size", "read", "zebra",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let q: Vec<&str> = (0..rng.random_range(1..4)).map(|_| *vocab.choose(&mut rng).unwrap()).collect();
        let query = q.join(" ");
        let (_, mut toks) = index.document(rng.random_range(0..index.len()));
        let before = index.score_document(&query, &toks);
        let free: Vec<usize> = (0..toks.len()).filter(|&i| !q.contains(&toks[i].as_str())).collect();
        let Some(&slot) = free.choose(&mut rng) else { continue };
        toks[slot] = q.choose(&mut rng).unwrap().to_string();
        let after = index.score_document(&query, &toks);
        assert!(after >= before, "{query}: {before} -> {after}");
    }
}

fn gt_of(ids: &[MethodId]) -> BTreeSet<MethodId> {
    ids.iter().cloned().collect()
}

#[test]
fn topn_recall_matches_membership_and_is_monotone() {
    check_topn_recall_matches_membership_and_is_monotone();
}

pub fn check_topn_recall_matches_membership_and_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pool: Vec<MethodId> = (0..12)
        .map(|i| MethodId::new(&format!("p.C{}", i % 4), &format!("m{}", i % 5), i as u32 % 2, "F.java"))
        .collect();
    for _ in 0..500 {
        let mut rankings = Vec::new();
        let mut gts = BTreeMap::new();
        for r in 0..rng.random_range(1..8) {
            let mut ids = pool.clone();
            ids.shuffle(&mut rng);
            ids.truncate(rng.random_range(1..pool.len()));
            let id = format!("R-{r}");
            let k = rng.random_range(0..3);
            let gt: Vec<MethodId> = pool.choose_multiple(&mut rng, k).cloned().collect();
            gts.insert(id.clone(), gt_of(&gt));
            rankings.push(RankedList {
                query_report_id: id,
                ranked: ids.into_iter().map(|m| (m, 0.0)).collect(),
            });
        }
        let mut prev = 0.0;
        for n in 1..=pool.len() + 1 {
            let got = topn_recall(&rankings, &gts, n);
            let hits = rankings
                .iter()
                .filter(|r| {
                    r.ranked.iter().take(n).any(|(m, _)| {
                        gts[&r.query_report_id]
                            .iter()
                            .any(|g| g.class_fqn == m.class_fqn && g.method_name == m.method_name)
                    })
                })
                .count();
            let want = 100.0 * hits as f64 / rankings.len() as f64;
            assert!((got - want).abs() < 1e-12);
            assert!((0.0..=100.0).contains(&got));
            assert!(got >= prev);
            prev = got;
        }
    }
    let single = RankedList {
        query_report_id: "R".into(),
        ranked: pool.iter().map(|m| (m.clone(), 0.0)).collect(),
    };
    let gts = BTreeMap::from([("R".to_string(), gt_of(&pool[5..6]))]);
    assert_eq!(topn_recall(&[single], &gts, pool.len()), 100.0);
}

fn results(matched: usize, total: usize) -> Vec<LocalizationResult> {
    let gt = gt_of(&[MethodId::new("a.B", "c", 0, "B.java")]);
    (0..total)
        .map(|i| {
            let pred = if i < matched { vec!["a.B#c".to_string()] } else { vec!["a.B#d".to_string()] };
            match_localization(&format!("X-{i}"), &pred, &gt)
        })
        .collect()
}

#[test]
fn accuracy_formula_fixtures() {
    check_accuracy_formula_fixtures();
}

pub fn check_accuracy_formula_fixtures() {
    assert!((accuracy(&results(212, 492)).unwrap() - 43.09).abs() < 0.01);
    assert!((accuracy(&results(198, 492)).unwrap() - 40.24).abs() < 0.01);
    assert_eq!(accuracy(&results(7, 7)).unwrap(), 100.0);
    assert_eq!(accuracy(&[]), Err(EvalError::Empty));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let total = rng.random_range(1..60);
        let matched = rng.random_range(0..=total);
        let mut rs = results(matched, total);
        rs.shuffle(&mut rng);
        let acc = accuracy(&rs).unwrap();
        assert!((acc - 100.0 * matched as f64 / total as f64).abs() < 1e-12);
        let i = rng.random_range(0..total);
        let mut pred = rs[i].predicted.clone();
        pred.insert(rng.random_range(0..=pred.len()), "a.B#c".into());
        rs[i] = match_localization(&rs[i].report_id, &pred, &rs[i].ground_truth);
        assert!(accuracy(&rs).unwrap() >= acc);
    }
}

#[test]
fn codebleu_group_means() {
    check_codebleu_group_means();
}

pub fn check_codebleu_group_means() {
    let groups = BTreeMap::from([
        ("ZOOKEEPER".to_string(), vec![]),
        ("HIVE".to_string(), vec![0.5]),
        ("HBASE".to_string(), vec![0.25, 0.75, 1.0]),
    ]);
    let (per, overall) = mean_codebleu(&groups);
    assert_eq!(format!("{:.2}", per["ZOOKEEPER"]), "0.00");
    assert!((per["HIVE"] - 50.0).abs() < 1e-12);
    assert!((per["HBASE"] - 200.0 / 3.0).abs() < 1e-12);
    assert!((overall - 62.5).abs() < 1e-12);
}

// Reference scorer, written separately from the library: its own
// tokenizer, n-gram counting and subtree enumeration.

const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const", "continue",
    "default", "do", "double", "else", "enum", "extends", "final", "finally", "float", "for", "goto", "if",
    "implements", "import", "instanceof", "int", "interface", "long", "native", "new", "package", "private",
    "protected", "public", "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
    "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false", "null",
];

fn ref_tokens(src: &str) -> Vec<String> {
    let re = Regex::new(
        r#""(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*'|[A-Za-z_$][\w$]*|\d+(?:\.\d+)?[lLfFdD]?|==|!=|<=|&&|\|\||\+\+|--|\+=|-=|->|::|\S"#,
    )
    .unwrap();
    re.find_iter(src).map(|m| m.as_str().to_string()).collect()
}

fn counts(t: &[String], n: usize) -> HashMap<Vec<String>, f64> {
    let mut m = HashMap::new();
    for i in 0..t.len().saturating_sub(n - 1) {
        *m.entry(t[i..i + n].to_vec()).or_insert(0.0) += 1.0;
    }
    m
}

fn ref_bleu(h: &[String], r: &[String], weighted: bool) -> f64 {
    let mut logs = 0.0;
    for n in 1..=4 {
        let hc = counts(h, n);
        let rc = counts(r, n);
        let (mut num, mut den) = (0.0, 0.0);
        if weighted {
            for (g, c) in &rc {
                let w = if n == 1 && JAVA_KEYWORDS.contains(&g[0].as_str()) { 4.0 } else { 1.0 };
                num += w * c.min(*hc.get(g).unwrap_or(&0.0));
                den += w * c;
            }
        } else {
            for (g, c) in &hc {
                num += c.min(*rc.get(g).unwrap_or(&0.0));
                den += c;
            }
        }
        if n == 1 && num == 0.0 {
            return 0.0;
        }
        logs += (if num == 0.0 { 0.1 } else { num } / den.max(1.0)).ln() / 4.0;
    }
    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    bp * logs.exp()
}

fn ref_sexp(n: &Node) -> String {
    let inner: Vec<String> = n.children.iter().map(ref_sexp).collect();
    if inner.is_empty() {
        format!("({})", n.kind.as_str())
    } else {
        format!("({} {})", n.kind.as_str(), inner.join(" "))
    }
}

fn ref_subtrees(n: &Node, top: bool, out: &mut Vec<String>) {
    if top || !n.children.is_empty() {
        out.push(ref_sexp(n));
    }
    for c in &n.children {
        ref_subtrees(c, false, out);
    }
}

fn ref_syntax(h: &Node, r: &Node) -> f64 {
    let (mut hs, mut rs) = (Vec::new(), Vec::new());
    ref_subtrees(h, true, &mut hs);
    ref_subtrees(r, true, &mut rs);
    rs.iter().filter(|s| hs.contains(s)).count() as f64 / rs.len() as f64
}

use Relation::{ComesFrom as CF, ComputedFrom as CMP};

fn f(var: usize, rel: Relation, parents: &[usize]) -> FlowItem {
    FlowItem::new(var, rel, parents)
}

struct Pair {
    members: bool,
    reference: &'static str,
    hypothesis: &'static str,
    ref_flow: Vec<FlowItem>,
    hyp_flow: Vec<FlowItem>,
    flow_score: Option<f64>,
}

fn curated() -> Vec<Pair> {
    let p1 = vec![f(2, CF, &[0, 1]), f(0, CF, &[]), f(1, CF, &[]), f(2, CF, &[2])];
    vec![
        Pair {
            members: false,
            reference: "int x = a + b; return x;",
            hypothesis: "int x = a + b; return x;",
            ref_flow: p1.clone(),
            hyp_flow: p1.clone(),
            flow_score: Some(1.0),
        },
        Pair {
            members: false,
            reference: "int x = a + b; return x;",
            hypothesis: "int y = a + c; return y;",
            ref_flow: p1.clone(),
            hyp_flow: p1,
            flow_score: Some(1.0),
        },
        Pair {
            members: false,
            reference: "if (key == null) { throw new IllegalArgumentException(\"key\"); } return map.get(key);",
            hypothesis: "if (key == null) { return null; } return map.get(key);",
            ref_flow: vec![f(0, CF, &[]), f(0, CF, &[0])],
            hyp_flow: vec![f(0, CF, &[]), f(0, CF, &[0])],
            flow_score: Some(1.0),
        },
        Pair {
            members: false,
            reference: "count++; total = total + count;",
            hypothesis: "count += 1; total = count;",
            ref_flow: vec![f(0, CMP, &[0]), f(1, CMP, &[1, 0]), f(1, CF, &[]), f(0, CF, &[0])],
            hyp_flow: vec![f(1, CMP, &[0]), f(0, CF, &[]), f(2, CMP, &[1]), f(1, CF, &[1])],
            flow_score: Some(0.0),
        },
        Pair {
            members: false,
            reference: "for (String s : items) { log(s); }",
            hypothesis: "for (String s : items) { log(items); }",
            ref_flow: vec![f(1, CMP, &[0]), f(0, CF, &[0]), f(2, CF, &[2]), f(1, CF, &[1])],
            hyp_flow: vec![f(1, CMP, &[0]), f(0, CF, &[0]), f(2, CF, &[2]), f(0, CF, &[0])],
            flow_score: Some(0.75),
        },
        Pair {
            members: false,
            reference: "String v = props.get(\"k\"); if (v == null) { v = \"d\"; } return v;",
            hypothesis: "String v = props.get(\"k\"); return v == null ? \"d\" : v;",
            ref_flow: vec![
                f(3, CF, &[0, 1, 2]),
                f(0, CF, &[]),
                f(1, CF, &[]),
                f(2, CF, &[]),
                f(3, CF, &[3]),
                f(3, CMP, &[4]),
                f(4, CF, &[]),
                f(3, CF, &[3]),
            ],
            hyp_flow: vec![
                f(3, CF, &[0, 1, 2]),
                f(0, CF, &[]),
                f(1, CF, &[]),
                f(2, CF, &[]),
                f(3, CF, &[3]),
                f(3, CF, &[3]),
            ],
            flow_score: Some(0.75),
        },
        Pair {
            members: true,
            reference: "void close() { if (ch != null) { ch.close(); ch = null; } }",
            hypothesis: "void close() { ch.close(); }",
            ref_flow: vec![f(0, CF, &[]), f(1, CF, &[]), f(1, CF, &[1]), f(0, CF, &[0])],
            hyp_flow: vec![f(0, CF, &[]), f(0, CF, &[0])],
            flow_score: Some(0.5),
        },
        Pair {
            members: false,
            reference: "int i = 0; while (i < n) { i = i + 1; }",
            hypothesis: "int i = 0; while (i < n) { i++; }",
            ref_flow: vec![
                f(1, CF, &[0]),
                f(0, CF, &[]),
                f(1, CF, &[1]),
                f(2, CF, &[2]),
                f(1, CMP, &[1, 3]),
                f(1, CF, &[1]),
                f(3, CF, &[]),
            ],
            hyp_flow: vec![f(1, CF, &[0]), f(0, CF, &[]), f(1, CF, &[1]), f(2, CF, &[2]), f(1, CMP, &[1])],
            flow_score: Some(4.0 / 7.0),
        },
        Pair {
            members: false,
            reference: "this.km = createKeyManager(loc, pw);",
            hypothesis: "km = createKeyManager(loc);",
            ref_flow: vec![f(3, CMP, &[0, 1, 2]), f(0, CF, &[]), f(1, CF, &[]), f(2, CF, &[])],
            hyp_flow: vec![f(2, CMP, &[0, 1]), f(0, CF, &[]), f(1, CF, &[])],
            flow_score: Some(0.5),
        },
        Pair {
            members: false,
            reference: "return a;",
            hypothesis: "return b;",
            ref_flow: vec![],
            hyp_flow: vec![],
            flow_score: None,
        },
    ]
}

fn tree(src: &str, members: bool) -> Node {
    let r = if members { parse_members(src) } else { parse_statements(src) };
    assert!(r.is_clean(), "{src}: {:?}", r.errors);
    r.root
}

#[test]
fn codebleu_matches_reference_scorer() {
    check_codebleu_matches_reference_scorer();
}

pub fn check_codebleu_matches_reference_scorer() {
    for p in curated() {
        let (rt, ht) = (tree(p.reference, p.members), tree(p.hypothesis, p.members));
        assert_eq!(normalized_dataflow(p.reference, &rt), p.ref_flow, "{}", p.reference);
        assert_eq!(normalized_dataflow(p.hypothesis, &ht), p.hyp_flow, "{}", p.hypothesis);

        let (h, r) = (ref_tokens(p.hypothesis), ref_tokens(p.reference));
        assert_eq!(code_tokens(p.hypothesis), h);
        let want = [
            ref_bleu(&h, &r, false),
            ref_bleu(&h, &r, true),
            ref_syntax(&ht, &rt),
        ];
        let got = codebleu(p.hypothesis, p.reference, CodeBleuWeights::default());
        assert!(!got.reference_unparseable);
        for (g, w) in [got.ngram, got.weighted_ngram, got.syntax.unwrap()].iter().zip(want) {
            assert!((g - w).abs() < 1e-6, "{}: {g} vs {w}", p.reference);
        }
        match (got.dataflow, p.flow_score) {
            (Some(g), Some(w)) => assert!((g - w).abs() < 1e-6, "{}: {g} vs {w}", p.reference),
            (None, None) => {}
            other => panic!("{}: {other:?}", p.reference),
        }
        let parts: Vec<f64> = [Some(want[0]), Some(want[1]), Some(want[2]), p.flow_score]
            .into_iter()
            .flatten()
            .collect();
        let combined = parts.iter().sum::<f64>() / parts.len() as f64;
        assert!((got.combined - combined).abs() < 1e-6);
    }
}

#[test]
fn empty_dataflow_renormalizes() {
    check_empty_dataflow_renormalizes();
}

pub fn check_empty_dataflow_renormalizes() {
    let s = codebleu("return b;", "return a;", CodeBleuWeights::default());
    assert_eq!(s.dataflow, None);
    let want = (s.ngram + s.weighted_ngram + s.syntax.unwrap()) / 3.0;
    assert!((s.combined - want).abs() < 1e-12);
    let skewed = CodeBleuWeights {
        ngram: 0.1,
        weighted_ngram: 0.1,
        syntax: 0.4,
        dataflow: 0.4,
    };
    let s2 = codebleu("return b;", "return a;", skewed);
    let want = (0.1 * s.ngram + 0.1 * s.weighted_ngram + 0.4 * s.syntax.unwrap()) / 0.6;
    assert!((s2.combined - want).abs() < 1e-12);
}

const IDENTITY: &[&str] = &[
    "int x = y + 1; return x;",
    "return map.get(key);",
    "if (a == null) { throw new IllegalStateException(\"a\"); }",
    "for (int i = 0; i < n; i++) { sum += values[i]; }",
    "for (String s : names) { out.add(s.trim()); }",
    "while (running) { step(); }",
    "do { n--; } while (n > 0);",
    "try { close(); } catch (IOException e) { log.warn(\"close\", e); }",
    "synchronized (lock) { count++; }",
    "switch (k) { case 1: return \"one\"; default: return \"many\"; }",
    "Runnable r = () -> System.out.println(\"hi\"); r.run();",
    "String s = flag ? \"yes\" : \"no\"; return s.length();",
    "int[] a = new int[3]; a[0] = 1; return a;",
    "void close() { if (ch != null) { ch.close(); ch = null; } }",
    "public int size() { return items.size(); }",
    "private static final int LIMIT = 10; int limit() { return LIMIT; }",
    "class A { int f; A(int f) { this.f = f; } }",
    "package p; import java.util.List; class B { List<String> xs; }",
    "interface Shape { double area(); }",
    "enum Color { RED, GREEN; Color next() { return values()[(ordinal() + 1) % 2]; } }",
];

#[test]
fn codebleu_identity() {
    check_codebleu_identity();
}

pub fn check_codebleu_identity() {
    for src in IDENTITY {
        let s = codebleu(src, src, CodeBleuWeights::default());
        assert!(!s.reference_unparseable, "{src}");
        assert!((s.combined - 1.0).abs() < 1e-12, "{src}: {s:?}");
        assert!((s.ngram - 1.0).abs() < 1e-12 && (s.weighted_ngram - 1.0).abs() < 1e-12);
        assert_eq!(s.syntax, Some(1.0));
        assert!(s.dataflow.is_none_or(|d| d == 1.0));
    }
}

#[test]
fn codebleu_disjoint_and_degenerate() {
    check_codebleu_disjoint_and_degenerate();
}

pub fn check_codebleu_disjoint_and_degenerate() {
    let s = codebleu("class A {}", "int x = y + 1; return x;", CodeBleuWeights::default());
    assert_eq!((s.ngram, s.weighted_ngram, s.syntax, s.dataflow), (0.0, 0.0, Some(0.0), Some(0.0)));
    assert_eq!(s.combined, 0.0);

    let e = codebleu("", "int x = y + 1; return x;", CodeBleuWeights::default());
    assert_eq!((e.ngram, e.weighted_ngram, e.combined), (0.0, 0.0, 0.0));
    assert_eq!(e.syntax, Some(0.0));

    let u = codebleu("int x = 1;", "int x = ;; {{", CodeBleuWeights::default());
    assert!(u.reference_unparseable);
    assert_eq!((u.syntax, u.dataflow), (None, None));
    assert!((u.combined - (u.ngram + u.weighted_ngram) / 2.0).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (a, b) = (IDENTITY.choose(&mut rng).unwrap(), IDENTITY.choose(&mut rng).unwrap());
        let s = codebleu(a, b, CodeBleuWeights::default());
        for v in [Some(s.ngram), Some(s.weighted_ngram), s.syntax, s.dataflow, Some(s.combined)]
            .into_iter()
            .flatten()
        {
            assert!((0.0..=1.0).contains(&v), "{a} / {b}: {s:?}");
        }
    }
}

#[test]
fn max_over_fixed_methods() {
    let fixed = vec![
        (MethodId::new("a.B", "f", 0, "B.java"), "int f() { return 1; }".to_string()),
        (MethodId::new("a.B", "g", 0, "B.java"), "void g() { if (x == null) { x = load(); } }".to_string()),
    ];
    let best = best_fix_score("void g() { if (x == null) { x = load(); } }", &fixed, CodeBleuWeights::default())
        .unwrap();
    assert_eq!(best.against.method_name, "g");
    assert!((best.score.combined - 1.0).abs() < 1e-12);
    assert!(best_fix_score("x", &[], CodeBleuWeights::default()).is_none());
}

fn pipeline(matched: bool, score: f64) -> PipelineEval {
    let id = MethodId::new("a.B", "c", 0, "B.java");
    let pred = if matched { vec!["a.B#c".to_string()] } else { vec![] };
    PipelineEval {
        localization: match_localization("R", &pred, &gt_of(std::slice::from_ref(&id))),
        fix: matched.then(|| FixScore {
            against: id,
            score: CodeBleuScore {
                ngram: score,
                weighted_ngram: score,
                syntax: Some(score),
                dataflow: None,
                combined: score,
                weights: CodeBleuWeights::default(),
                reference_unparseable: false,
            },
        }),
    }
}

#[test]
fn summary_tables() {
    let rec = |system: &str, rank: Option<usize>, d: (bool, f64), a: (bool, f64)| ReportEval {
        system: system.into(),
        report_id: format!("{system}-1"),
        bm25_rank: rank,
        direct: Some(pipeline(d.0, d.1)),
        agentic: Some(pipeline(a.0, a.1)),
    };
    let records = vec![
        rec("HIVE", Some(1), (true, 0.5), (true, 0.7)),
        rec("HIVE", Some(4), (false, 0.0), (true, 0.5)),
        rec("ZOOKEEPER", None, (false, 0.0), (false, 0.0)),
    ];
    let s = summarize(&records, &[5, 1, 3]);
    assert_eq!(s.localization.len(), 3);
    let hive = &s.localization[0];
    assert_eq!((hive.top(1), hive.top(3), hive.top(5)), (Some(50.0), Some(50.0), Some(100.0)));
    assert_eq!((hive.direct, hive.agentic), (Some(50.0), Some(100.0)));
    let overall = &s.localization[2];
    assert_eq!(overall.system, OVERALL);
    assert!((overall.agentic.unwrap() - 200.0 / 3.0).abs() < 1e-12);

    let csv = s.codebleu_csv();
    assert!(csv.contains("ZOOKEEPER,0,0.00,0,0.00"), "{csv}");
    assert!(csv.contains("HIVE,1,50.00,2,60.00"), "{csv}");
    assert!(csv.contains("Overall,1,50.00,2,60.00"), "{csv}");
    assert_eq!(s.localization_csv().lines().count(), 4);
    let md = s.to_markdown();
    assert!(md.contains("| **Overall** |") && md.contains(AGGREGATION_RULE));
    assert!(s.localization_csv().starts_with("system,reports,bm25_top1,bm25_top3,bm25_top5,direct,agentic\n"));

    // Only direct outputs: every agentic cell is marked, in both tables.
    let direct_only: Vec<ReportEval> = records
        .into_iter()
        .map(|mut r| {
            r.agentic = None;
            r
        })
        .collect();
    let s = summarize(&direct_only, &[1, 3, 5]);
    assert!(s.localization.iter().all(|r| r.agentic.is_none() && r.direct.is_some()));
    assert!(s.codebleu.iter().all(|r| r.agentic.is_none() && r.direct.is_some()));
    let csv = s.codebleu_csv();
    assert!(csv.contains(&format!("HIVE,1,50.00,0,{NOT_COMPUTED}")), "{csv}");
    assert!(s.to_markdown().contains(NOT_COMPUTED));
}

#[derive(Deserialize)]
struct Labeled {
    report: Vec<LabeledReport>,
}

#[derive(Deserialize)]
struct LabeledReport {
    id: String,
    title: String,
    description: String,
    labels: [bool; 4],
}

fn crash(id: &str, title: &str, description: &str) -> CrashReport {
    CrashReport {
        id: id.into(),
        title: title.into(),
        description: description.into(),
        created_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
        priority: Priority::Major,
        status: Status::Fixed,
        fix_commit: None,
    }
}

#[test]
fn audit_agrees_with_hand_labels() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/audit/labeled.toml")).unwrap();
    let labeled: Labeled = toml::from_str(&text).unwrap();
    assert_eq!(labeled.report.len(), 30);
    let mut agree = 0;
    let mut misses = Vec::new();
    for r in &labeled.report {
        let got = audit_fields(AuditInput::Raw(&crash(&r.id, &r.title, &r.description))).as_array();
        for (i, (g, w)) in got.iter().zip(r.labels).enumerate() {
            if *g == w {
                agree += 1;
            } else {
                misses.push(format!("{}[{i}]", r.id));
            }
        }
    }
    let rate = agree as f64 / 120.0;
    println!("audit agreement {:.1}% misses {misses:?}", rate * 100.0);
    assert!(rate >= 0.8, "agreement {rate} misses {misses:?}");
}

fn enhanced(root: &str, steps: &[&str], loc: &[&str], repair: &str, fix: &str) -> EnhancedReport {
    EnhancedReport {
        report_id: "R-1".into(),
        provenance: Provenance::Direct,
        root_cause: root.into(),
        steps_to_reproduce: steps.iter().map(|s| s.to_string()).collect(),
        problem_location: loc.iter().map(|s| s.to_string()).collect(),
        repair_suggestion: repair.into(),
        possible_fix: fix.into(),
        evidence: vec![],
    }
}

#[test]
fn audit_and_completeness_levels() {
    let full = enhanced("ctor skips null check", &["start", "connect"], &["a.B#c"], "check null", "if (x == null) return;");
    assert_eq!(audit_fields(AuditInput::Enhanced(&full)).as_array(), [true; 4]);
    assert_eq!(
        completeness(AuditInput::Enhanced(&full)),
        Completeness {
            location: LocationLevel::Method,
            root_cause: true,
            repair: RepairLevel::Code
        }
    );
    let sparse = enhanced(UNKNOWN, &[UNKNOWN], &["unknown#unknown"], "add a guard", UNKNOWN);
    assert_eq!(audit_fields(AuditInput::Enhanced(&sparse)).as_array(), [false, false, false, true]);
    let c = completeness(AuditInput::Enhanced(&sparse));
    assert_eq!((c.location, c.root_cause, c.repair), (LocationLevel::Absent, false, RepairLevel::Guidance));

    let raw = crash("R-2", "t", "To reproduce: 1. start server\n");
    assert!(audit_fields(AuditInput::Raw(&raw)).steps);
    let raw = crash("R-3", "t", "Store.flush does not sync because the channel is closed.\nPatch:\nchannel.force(true);\n");
    let c = completeness(AuditInput::Raw(&raw));
    assert_eq!((c.location, c.root_cause, c.repair), (LocationLevel::Method, true, RepairLevel::Code));
    let raw = crash("R-4", "t", "java.lang.IllegalStateException\n\tat a.B.c(B.java:1)\n");
    let c = completeness(AuditInput::Raw(&raw));
    assert_eq!((c.location, c.root_cause, c.repair), (LocationLevel::Absent, false, RepairLevel::Absent));
}
