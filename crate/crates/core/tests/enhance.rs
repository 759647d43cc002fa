use std::collections::{BTreeSet, VecDeque};
use std::sync::{Arc, Mutex};

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crashctx_core::enhance::*;
use crashctx_core::ingest::{CrashReport, Priority, StackFrame, StackTrace, Status, ExceptionHeader};
use crashctx_core::jindex::{build_call_graph, parse_file, CallGraph, MethodId, MethodNode};
use crashctx_core::llm::*;
use crashctx_core::store::{Direction, GraphStore};

const CONFIG: &str = "package app;

public class Config {
    static Config load() {
        return new Config();
    }

    void validate() {
        String p = null;
        p.length();
    }
}
";

const SERVER: &str = "package app;

public class Server {
    public void start() {
        Config c = Config.load();
        c.validate();
        handle(c);
    }

    void handle(Config c) {
        Worker.run(c);
    }
}
";

const WORKER: &str = "package app;

public class Worker {
    static void run(Config c) {
        c.validate();
    }

    static void idle() {
    }
}
";

fn app_store() -> GraphStore {
    let parsed = vec![
        parse_file("src/app/Config.java", CONFIG),
        parse_file("src/app/Server.java", SERVER),
        parse_file("src/app/Worker.java", WORKER),
    ];
    GraphStore::new(build_call_graph(&parsed), "c0")
}

fn mid(s: &str) -> MethodId {
    s.parse().unwrap()
}

fn frame(class: &str, method: &str, file: &str, line: u32) -> StackFrame {
    StackFrame {
        class_fqn: class.into(),
        method_name: method.into(),
        file_name: file.into(),
        line,
    }
}

fn npe(frames: Vec<StackFrame>) -> StackTrace {
    StackTrace {
        headers: vec![ExceptionHeader {
            exception_type: Some("java.lang.NullPointerException".into()),
            message: None,
            line: "java.lang.NullPointerException".into(),
        }],
        frames,
    }
}

fn app_trace() -> StackTrace {
    npe(vec![
        frame("app.Config", "validate", "Config.java", 10),
        frame("app.Server", "start", "Server.java", 6),
        frame("java.lang.Thread", "run", "Thread.java", 748),
    ])
}

fn report(id: &str, trace: &StackTrace) -> CrashReport {
    CrashReport {
        id: id.into(),
        title: "Server fails to start".into(),
        description: format!("Startup dies with an NPE.\n\n{}", trace.render()),
        created_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
        priority: Priority::Major,
        status: Status::Fixed,
        fix_commit: None,
    }
}

fn final_reply(loc: &str) -> String {
    json!({
        "root_cause": "validate dereferences a null string",
        "steps_to_reproduce": ["start the server"],
        "problem_location": [loc],
        "repair_suggestion": "check for null",
        "possible_fix": "if (p == null) return;"
    })
    .to_string()
}

/// Answers agent prompts from one queue and report prompts from another.
struct Split {
    agent: Mutex<VecDeque<String>>,
    report: Mutex<VecDeque<String>>,
}

impl Split {
    fn new(agent: Vec<String>, report: Vec<String>) -> Arc<Self> {
        Arc::new(Self {
            agent: Mutex::new(agent.into()),
            report: Mutex::new(report.into()),
        })
    }
}

impl Transport for Split {
    fn send(&self, messages: &[Message], _: &ChatParams) -> Result<Completion, TransportError> {
        let queue = if messages[0].content == AGENT_TEMPLATE {
            &self.agent
        } else {
            &self.report
        };
        let text = queue
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| TransportError::new(TransportErrorKind::Fatal, "script exhausted"))?;
        Ok(Completion {
            text,
            usage: Usage {
                prompt_tokens: 10,
                completion_tokens: 5,
            },
        })
    }
}

fn client(t: Arc<dyn Transport>) -> LlmClient {
    LlmClient::new(t).with_sleep(|_| {})
}

fn retrieves(h: &[HistoryEntry]) -> Vec<MethodId> {
    h.iter()
        .filter(|e| e.action == Action::Retrieve)
        .map(|e| e.method.clone().unwrap())
        .collect()
}

#[test]
fn fixture_edges_as_expected() {
    let store = app_store();
    let start = mid("app.Server#start/0@src/app/Server.java");
    let callees: Vec<String> = store
        .neighbors(&start, Direction::Callees)
        .unwrap()
        .iter()
        .map(MethodId::location)
        .collect();
    assert_eq!(callees, ["app.Config#load", "app.Config#validate", "app.Server#handle"]);
}

#[test]
fn frame_selection_skips_jdk_and_dedups() {
    let store = app_store();
    let mut t = app_trace();
    t.frames.push(frame("app.Server", "start", "Server.java", 5));
    let sel = select_frame_methods(&t, &store);
    let ids: Vec<String> = sel.methods.iter().map(|m| m.id.location()).collect();
    assert_eq!(ids, ["app.Config#validate", "app.Server#start"]);
    assert_eq!(sel.unmapped, 1);
}

#[test]
fn direct_is_one_exchange() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-1", &t);
    let transport = Arc::new(ScriptedTransport::new([format!(
        "Here you go:\n```json\n{}\n```",
        final_reply("app.Config.validate()")
    )]));
    let mut tr = Transcript::record();
    let out = enhance_direct(&r, &t, &store, &client(transport), &mut tr, &EnhanceSettings::default()).unwrap();
    assert_eq!(tr.exchanges().len(), 1);
    assert_eq!(out.completions, 1);
    assert_eq!(out.report.provenance, Provenance::Direct);
    assert_eq!(out.report.problem_location, ["app.Config#validate"]);
    assert_eq!(
        out.report.evidence,
        ["app.Config#validate/0@src/app/Config.java", "app.Server#start/0@src/app/Server.java"]
    );
    let prompt = &tr.exchanges()[0].request[1].content;
    assert!(prompt.contains("p.length();"));
    assert!(prompt.contains("## Stack trace"));
    validate_document(&serde_json::from_str(&out.report.to_document()).unwrap()).unwrap();
    assert_eq!(out.usage.completion_tokens, tr.exchanges()[0].usage.completion_tokens);
}

#[test]
fn direct_without_mapped_frames() {
    let store = app_store();
    let t = npe(vec![frame("java.util.HashMap", "get", "HashMap.java", 10)]);
    let r = report("APP-2", &t);
    let transport = Arc::new(ScriptedTransport::new([json!({
        "root_cause": "", "steps_to_reproduce": [], "problem_location": [],
        "repair_suggestion": "", "possible_fix": ""
    })
    .to_string()]));
    let mut tr = Transcript::record();
    let out = enhance_direct(&r, &t, &store, &client(transport), &mut tr, &EnhanceSettings::default()).unwrap();
    let prompt = &tr.exchanges()[0].request[1].content;
    assert!(!prompt.contains("## Method source code"));
    assert_eq!(out.report.root_cause, UNKNOWN);
    assert_eq!(out.report.problem_location, ["java.util.HashMap#get"]);
    assert!(out.report.evidence.is_empty());
    validate_document(&serde_json::from_str(&out.report.to_document()).unwrap()).unwrap();
}

#[test]
fn direct_reformat_retry_then_failure() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-3", &t);
    let ok = Arc::new(ScriptedTransport::new(["no idea".to_string(), final_reply("app.Server#start")]));
    let mut tr = Transcript::record();
    let out = enhance_direct(&r, &t, &store, &client(ok), &mut tr, &EnhanceSettings::default()).unwrap();
    assert_eq!(out.completions, 2);
    assert_eq!(tr.exchanges()[1].request.len(), 4);

    let bad = Arc::new(ScriptedTransport::new(["no idea", "{\"root_cause\": \"x\"}"]));
    let err = enhance_direct(&r, &t, &store, &client(bad), &mut Transcript::record(), &EnhanceSettings::default())
        .unwrap_err();
    match err {
        EnhanceError::Structured { error, .. } => assert!(error.raw.contains("root_cause")),
        other => panic!("{other}"),
    }
}

#[test]
fn four_step_transcript() {
    check_four_step_transcript();
}

pub fn check_four_step_transcript() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-4", &t);
    let agent = vec![
        json!({"action": "provide_method", "method": "app.Server#start/0@src/app/Server.java"}).to_string(),
        json!({"action": "update_candidates", "candidates": [{"method": "app.Config#validate", "note": "null p"}]})
            .to_string(),
        json!({"action": "provide_method", "method": "Config.load"}).to_string(),
        json!({"action": "conclude", "root_cause": "p is null"}).to_string(),
    ];
    let transport = Split::new(agent, vec![final_reply("app.Config#validate")]);
    let mut tr = Transcript::record();
    let budget = AgentBudget::default();
    let settings = EnhanceSettings::default();
    let out = enhance_agentic(&r, &t, &store, &client(transport), &mut tr, &settings, &budget).unwrap();
    let run = out.agent.clone().unwrap();
    assert_eq!(run.history.len(), 4);
    assert_eq!(run.history[3].action, Action::Conclude);
    assert_eq!(run.termination, Termination::Concluded);
    let steps: Vec<usize> = run.history.iter().map(|e| e.step).collect();
    assert_eq!(steps, [1, 2, 3, 4]);
    assert_eq!(
        run.analyzed.iter().map(MethodId::location).collect::<Vec<_>>(),
        ["app.Config#validate", "app.Server#start", "app.Config#load"]
    );
    assert_eq!(run.candidates.len(), 1);
    assert_eq!(out.completions, 5);
    assert_eq!(tr.exchanges().len(), 5);
    assert_eq!(out.report.evidence.len(), 3);
    let final_prompt = &tr.exchanges()[4].request[1].content;
    assert!(final_prompt.contains("## Analysis history"));
    assert!(final_prompt.contains("## Suspected methods"));

    // Replaying the saved transcript gives the same document without the network.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    tr.save(&path).unwrap();
    let prohibited = Arc::new(ProhibitedTransport::default());
    let mut replay = Transcript::replay_from(&path).unwrap();
    let again = enhance_agentic(&r, &t, &store, &client(prohibited.clone()), &mut replay, &settings, &budget).unwrap();
    assert_eq!(again.report.to_document(), out.report.to_document());
    assert_eq!(prohibited.calls(), 0);
}

#[test]
fn visited_request_is_rejected() {
    check_visited_request_is_rejected();
}

pub fn check_visited_request_is_rejected() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-5", &t);
    let sel = select_frame_methods(&t, &store);
    let mut state = AgentState::start(&r, &t, &sel);
    let transport = Arc::new(ScriptedTransport::new([
        json!({"action": "provide_method", "method": "app.Config#validate"}).to_string(),
        json!({"action": "provide_method", "method": "app.Server#start"}).to_string(),
    ]));
    let c = client(transport);
    let mut tr = Transcript::record();
    let (s, b) = (EnhanceSettings::default(), AgentBudget::default());
    agent_step(&mut state, &store, &c, &mut tr, &s, &b).unwrap();
    assert_eq!(state.visited.len(), 1);
    assert_eq!(state.history[0].action, Action::Reason);
    assert!(state.history[0].note.contains("already analyzed"));
    assert!(state.feedback.is_some());
    agent_step(&mut state, &store, &c, &mut tr, &s, &b).unwrap();
    assert_eq!(state.visited.len(), 2);
    assert_eq!(state.history[1].action, Action::Retrieve);
    assert!(tr.exchanges()[1].request[1].content.contains("Request rejected"));
}

#[test]
fn name_search_reaches_unrelated_method() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-6", &t);
    let sel = select_frame_methods(&t, &store);
    let mut state = AgentState::start(&r, &t, &sel);
    let transport = Arc::new(ScriptedTransport::new([
        json!({"action": "provide_method", "method": "idle"}).to_string(),
        json!({"action": "provide_method", "method": "nothingLikeThis"}).to_string(),
    ]));
    let c = client(transport);
    let mut tr = Transcript::record();
    let (s, b) = (EnhanceSettings::default(), AgentBudget::default());
    agent_step(&mut state, &store, &c, &mut tr, &s, &b).unwrap();
    assert_eq!(state.history[0].method.as_ref().unwrap().location(), "app.Worker#idle");
    assert!(state.history[0].note.contains("name search"));
    agent_step(&mut state, &store, &c, &mut tr, &s, &b).unwrap();
    assert_eq!(state.history[1].action, Action::Reason);
}

#[test]
fn isolated_method_exhausts_frontier() {
    check_isolated_method_exhausts_frontier();
}

pub fn check_isolated_method_exhausts_frontier() {
    let lone = "package z;\n\npublic class Lone {\n    void only() {\n        int x = 1;\n    }\n}\n";
    let store = GraphStore::new(build_call_graph(&[parse_file("src/z/Lone.java", lone)]), "c0");
    let t = npe(vec![frame("z.Lone", "only", "Lone.java", 5)]);
    let r = report("Z-1", &t);
    let transport = Split::new(
        vec![json!({"action": "update_candidates", "candidates": ["z.Lone#only"]}).to_string()],
        vec![final_reply("z.Lone#only")],
    );
    let mut tr = Transcript::record();
    let run = run_agent(&r, &t, &store, &client(transport), &mut tr, &EnhanceSettings::default(), &AgentBudget::default())
        .unwrap();
    assert_eq!(run.termination, Termination::FrontierExhausted);
    assert_eq!(run.steps, 1);
    assert_eq!(run.analyzed.len(), 1);
}

#[test]
fn stalls_after_two_idle_steps() {
    check_stalls_after_two_idle_steps();
}

pub fn check_stalls_after_two_idle_steps() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-7", &t);
    let transport = Split::new(vec!["thinking".into(), json!({"action": "wait"}).to_string()], vec![]);
    let run = run_agent(
        &r,
        &t,
        &store,
        &client(transport),
        &mut Transcript::record(),
        &EnhanceSettings::default(),
        &AgentBudget::default(),
    )
    .unwrap();
    assert_eq!(run.termination, Termination::Stalled);
    assert_eq!(run.history.len(), 2);
}

#[test]
fn zero_steps_matches_direct_context() {
    check_zero_steps_matches_direct_context();
}

pub fn check_zero_steps_matches_direct_context() {
    let store = app_store();
    let t = app_trace();
    let r = report("APP-8", &t);
    let settings = EnhanceSettings::default();
    let budget = AgentBudget {
        max_steps: 0,
        ..AgentBudget::default()
    };
    let mut agentic = Transcript::record();
    let out = enhance_agentic(
        &r,
        &t,
        &store,
        &client(Split::new(vec![], vec![final_reply("app.Server#start")])),
        &mut agentic,
        &settings,
        &budget,
    )
    .unwrap();
    let mut direct = Transcript::record();
    enhance_direct(
        &r,
        &t,
        &store,
        &client(Arc::new(ScriptedTransport::new([final_reply("app.Server#start")]))),
        &mut direct,
        &settings,
    )
    .unwrap();
    let run = out.agent.unwrap();
    assert_eq!(run.termination, Termination::BudgetStop);
    assert!(run.history.is_empty());
    assert_eq!(run.analyzed, [mid("app.Config#validate/0@src/app/Config.java")]);
    assert_eq!(agentic.exchanges().len(), 1);
    assert_eq!(agentic.exchanges()[0].request, direct.exchanges()[0].request);
    assert_eq!(agentic.exchanges()[0].digest, direct.exchanges()[0].digest);
}

#[test]
fn truncation_matches_prefix_search() {
    check_truncation_matches_prefix_search();
}

pub fn check_truncation_matches_prefix_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let n = rng.random_range(0..10);
        let methods: Vec<MethodNode> = (0..n)
            .map(|i| MethodNode {
                id: MethodId::new("p.C", &format!("m{i}"), 0, "src/p/C.java"),
                body_text: "é".repeat(rng.random_range(0..300)) + &"x".repeat(rng.random_range(0..1500)),
                span: (1, 1),
                doc_text: None,
                varargs: false,
                extra_spans: vec![],
            })
            .collect();
        let overhead = rng.random_range(0..500);
        let budget = rng.random_range(0..4000);
        let costs: Vec<usize> = methods.iter().map(|m| method_cost(m, &ByteEstimator)).collect();
        // Largest k whose prefix fits, found by trying every k.
        let best = (0..=n)
            .filter(|&k| overhead + costs[..k].iter().sum::<usize>() <= budget)
            .max()
            .unwrap_or(0);
        let t = truncate_for_budget(&methods, budget, overhead, &ByteEstimator);
        if best == 0 && n > 0 {
            assert!(t.body_truncated, "case {case}");
            assert_eq!(t.methods.len(), 1);
            assert_eq!(t.methods[0].id, methods[0].id);
            let body = t.methods[0].body_text.strip_suffix(TRUNCATION_MARKER).unwrap();
            assert!(methods[0].body_text.starts_with(body));
        } else {
            assert!(!t.body_truncated, "case {case}");
            assert_eq!(t.methods, methods[..best], "case {case}");
            assert_eq!(t.dropped, n - best);
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng) -> (GraphStore, Vec<MethodId>) {
    let n = rng.random_range(2..14);
    let classes = ["r.A", "r.B", "r.c.D"];
    let mut graph = CallGraph::default();
    let mut ids = Vec::new();
    for i in 0..n {
        let class = classes[i % classes.len()];
        let file = format!("src/{}.java", class.replace('.', "/"));
        let id = MethodId::new(class, &format!("m{}", i % 5), (i / 5) as u32, &file);
        let start = 10 * i as u32 + 1;
        graph.nodes.insert(
            id.clone(),
            MethodNode {
                id: id.clone(),
                body_text: format!("void m() {{ {} }}", "y;".repeat(rng.random_range(0..40))),
                span: (start, start + 8),
                doc_text: None,
                varargs: false,
                extra_spans: vec![],
            },
        );
        ids.push(id);
    }
    let edges = rng.random_range(0..n * 2);
    for _ in 0..edges {
        let a = ids[rng.random_range(0..n)].clone();
        let b = ids[rng.random_range(0..n)].clone();
        graph.edges.insert((a, b));
    }
    (GraphStore::new(graph, "c0"), ids)
}

fn random_reply(rng: &mut ChaCha8Rng, ids: &[MethodId]) -> String {
    let pick = |rng: &mut ChaCha8Rng| ids[rng.random_range(0..ids.len())].clone();
    match rng.random_range(0..10) {
        0..=3 => json!({"action": "provide_method", "method": pick(rng).to_string()}).to_string(),
        4 => json!({"action": "provide_method", "method": pick(rng).method_name}).to_string(),
        5 => json!({"action": "provide_method", "method": pick(rng).location(),
                    "candidates": [{"method": pick(rng).location(), "note": "odd"}]})
        .to_string(),
        6 => json!({"action": "update_candidates",
                    "candidates": [{"method": pick(rng).to_string(), "note": format!("n{}", rng.random_range(0..3))},
                                   "no.such#thing"]})
        .to_string(),
        7 => json!({"action": "conclude", "root_cause": "found it"}).to_string(),
        8 => "I need to think about this more.".to_string(),
        _ => json!({"action": "provide_method", "method": "missingMethod"}).to_string(),
    }
}

#[test]
fn randomized_agent_runs_are_safe() {
    check_randomized_agent_runs_are_safe();
}

pub fn check_randomized_agent_runs_are_safe() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = EnhanceSettings::default();
    let mut seen = BTreeSet::new();
    for case in 0..200 {
        let (store, ids) = random_graph(&mut rng);
        let mut frames = Vec::new();
        for _ in 0..rng.random_range(0..5) {
            if rng.random_bool(0.25) {
                frames.push(frame("java.lang.Thread", "run", "Thread.java", 748));
            } else {
                let node = store.graph().node(&ids[rng.random_range(0..ids.len())]).unwrap();
                let file = node.id.file_path.rsplit('/').next().unwrap().to_string();
                frames.push(frame(&node.id.class_fqn, &node.id.method_name, &file, node.span.0 + 1));
            }
        }
        let t = npe(frames);
        let r = report(&format!("R-{case}"), &t);
        let budget = AgentBudget {
            max_steps: rng.random_range(0..8),
            ..AgentBudget::default()
        };
        let agent: Vec<String> = (0..12).map(|_| random_reply(&mut rng, &ids)).collect();
        let mut reports = vec![final_reply(&ids[0].location())];
        if rng.random_bool(0.2) {
            reports.insert(0, "garbled".into());
        }
        let transport = Split::new(agent, reports);
        let mut tr = Transcript::record();
        let result = enhance_agentic(&r, &t, &store, &client(transport), &mut tr, &settings, &budget);
        assert!(tr.exchanges().len() <= budget.max_steps + 1, "case {case}: completion cap");
        let out = match result {
            Ok(out) => out,
            Err(EnhanceError::Structured { .. }) => continue,
            Err(e) => panic!("case {case}: {e}"),
        };
        assert_eq!(out.completions, tr.exchanges().len());
        let run = out.agent.clone().unwrap();

        let got = retrieves(&run.history);
        let unique: BTreeSet<_> = got.iter().collect();
        assert_eq!(unique.len(), got.len(), "case {case}: revisit");
        let started = !select_frame_methods(&t, &store).methods.is_empty();
        if started {
            assert!(!got.contains(&run.analyzed[0]), "case {case}: start method retrieved again");
        }
        assert_eq!(run.analyzed.len(), got.len() + usize::from(started));
        seen.insert(format!("{:?}", run.termination));
        for (i, e) in run.history.iter().enumerate() {
            assert_eq!(e.step, i + 1);
        }
        let concludes = run.history.iter().filter(|e| e.action == Action::Conclude).count();
        match run.termination {
            Termination::Concluded => {
                assert_eq!(concludes, 1);
                assert_eq!(run.history.last().unwrap().action, Action::Conclude);
            }
            Termination::BudgetStop => {
                assert_eq!(concludes, 0);
                assert_eq!(run.steps, budget.max_steps);
            }
            Termination::Stalled => {
                assert_eq!(concludes, 0);
                let tail = &run.history[run.history.len() - 2..];
                assert!(tail.iter().all(|e| e.action == Action::Reason));
            }
            Termination::FrontierExhausted => {
                assert_eq!(concludes, 0);
                let mut reach = BTreeSet::new();
                for v in &run.analyzed {
                    reach.extend(store.neighbors(v, Direction::Both).unwrap());
                }
                assert!(reach.iter().all(|m| run.analyzed.contains(m)), "case {case}");
            }
        }
        for e in &out.report.evidence {
            assert!(store.contains(&e.parse().unwrap()));
        }
        validate_document(&serde_json::from_str(&out.report.to_document()).unwrap()).unwrap();

        let mut replay = Transcript::replay(tr.exchanges().to_vec());
        let prohibited = Arc::new(ProhibitedTransport::default());
        let again = enhance_agentic(&r, &t, &store, &client(prohibited.clone()), &mut replay, &settings, &budget)
            .unwrap();
        assert_eq!(again.report.to_document(), out.report.to_document());
        assert_eq!(again.agent, out.agent);
        assert_eq!(prohibited.calls(), 0);
    }
    assert_eq!(seen.len(), 4, "{seen:?}");
}

#[test]
fn markdown_page_sections() {
    let t = app_trace();
    let r = report("APP-9", &t);
    let fields = serde_json::from_str(&final_reply("app.Config#validate")).unwrap();
    let e = report_from_fields("APP-9", Provenance::Agentic, &fields, &[], "a.B#c");
    let page = render_markdown(&r, &e);
    for h in ["## Root Cause", "## Steps To Reproduce", "## Problem Location", "## Repair Suggestion", "## Possible Fix"] {
        assert!(page.contains(h), "{h}");
    }
    assert!(page.contains("1. start the server"));
}
