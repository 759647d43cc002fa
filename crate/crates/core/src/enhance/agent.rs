use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ingest::{CrashReport, StackTrace};
use crate::jindex::{MethodId, MethodNode};
use crate::llm::{parse_structured, LlmClient, Message, Transcript};
use crate::store::{Direction, GraphStore, StoreError};

use super::direct::{fallback_location, select_frame_methods, usage_since, write_report, FrameSelection};
use super::prompt::{method_block, ReportPrompt, AGENT_TEMPLATE};
use super::truncate::TRUNCATION_MARKER;
use super::{normalize_location, AgentBudget, EnhanceError, EnhanceOutcome, EnhanceSettings, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Retrieve,
    Reason,
    Conclude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub action: Action,
    pub method: Option<MethodId>,
    pub note: String,
}

impl HistoryEntry {
    fn line(&self) -> String {
        let action = match self.action {
            Action::Retrieve => "retrieve",
            Action::Reason => "reason",
            Action::Conclude => "conclude",
        };
        match &self.method {
            Some(m) => format!("{}. {action} {m}: {}", self.step, self.note),
            None => format!("{}. {action}: {}", self.step, self.note),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: MethodId,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Concluded,
    FrontierExhausted,
    /// Two steps in a row without a retrieval or a candidate change.
    Stalled,
    BudgetStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Concluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub report_id: String,
    pub title: String,
    pub trace: StackTrace,
    pub frame_methods: Vec<MethodId>,
    /// Analyzed methods in visit order.
    pub visited: Vec<MethodId>,
    pub current: Option<MethodId>,
    pub last_retrieved: Option<MethodNode>,
    pub history: Vec<HistoryEntry>,
    pub candidates: Vec<Candidate>,
    pub steps: usize,
    pub idle_streak: usize,
    /// Shown to the model on the next step, then cleared.
    pub feedback: Option<String>,
    pub conclusion: Option<String>,
}

impl AgentState {
    /// Starts at the topmost indexed frame method, counted as analyzed.
    pub fn start(report: &CrashReport, trace: &StackTrace, frames: &FrameSelection) -> Self {
        let top = frames.methods.first();
        Self {
            report_id: report.id.clone(),
            title: report.title.trim().to_string(),
            trace: trace.clone(),
            frame_methods: frames.methods.iter().map(|m| m.id.clone()).collect(),
            visited: top.map(|m| m.id.clone()).into_iter().collect(),
            current: top.map(|m| m.id.clone()),
            last_retrieved: top.cloned(),
            history: Vec::new(),
            candidates: Vec::new(),
            steps: 0,
            idle_streak: 0,
            feedback: None,
            conclusion: None,
        }
    }

    fn is_visited(&self, id: &MethodId) -> bool {
        self.visited.contains(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub analyzed: Vec<MethodId>,
    pub history: Vec<HistoryEntry>,
    pub candidates: Vec<Candidate>,
    pub termination: Termination,
    pub steps: usize,
    pub conclusion: Option<String>,
}

/// Unvisited methods the model may request next, tagged with how they
/// relate to the current method.
fn offers(state: &AgentState, store: &GraphStore) -> Result<Vec<(MethodId, &'static str)>, StoreError> {
    let mut out: Vec<(MethodId, &'static str)> = Vec::new();
    let mut add = |id: MethodId, tag| {
        if !state.is_visited(&id) && !out.iter().any(|(o, _)| *o == id) {
            out.push((id, tag));
        }
    };
    if let Some(cur) = &state.current {
        for id in store.neighbors(cur, Direction::Callees)? {
            add(id, "callee");
        }
        for id in store.neighbors(cur, Direction::Callers)? {
            add(id, "caller");
        }
    }
    for id in &state.frame_methods {
        add(id.clone(), "frame");
    }
    Ok(out)
}

/// Unvisited methods adjacent to anything analyzed, plus unvisited frames.
pub fn frontier(state: &AgentState, store: &GraphStore) -> Result<Vec<MethodId>, StoreError> {
    let mut out = std::collections::BTreeSet::new();
    for v in &state.visited {
        out.extend(store.neighbors(v, Direction::Both)?);
    }
    out.extend(state.frame_methods.iter().cloned());
    Ok(out.into_iter().filter(|id| !state.is_visited(id)).collect())
}

fn id_matches(id: &MethodId, raw: &str) -> bool {
    if let Ok(full) = raw.parse::<MethodId>() {
        return *id == full;
    }
    if let Some(loc) = normalize_location(raw) {
        let own = id.location();
        return own == loc || own.ends_with(&format!(".{loc}"));
    }
    id.method_name == raw
}

fn requested_name(raw: &str) -> Option<String> {
    if let Ok(full) = raw.parse::<MethodId>() {
        return Some(full.method_name);
    }
    if let Some(loc) = normalize_location(raw) {
        return loc.split_once('#').map(|(_, m)| m.to_string());
    }
    let bare = raw.split('(').next().unwrap_or("").trim();
    let ok = !bare.is_empty() && bare.chars().all(|c| c.is_alphanumeric() || "_$<>".contains(c));
    ok.then(|| bare.to_string())
}

enum Resolution {
    Found(MethodId, &'static str),
    Rejected(String),
}

fn resolve_request(
    state: &AgentState,
    store: &GraphStore,
    offered: &[(MethodId, &'static str)],
    raw: &str,
) -> Resolution {
    if let Some((id, tag)) = offered.iter().find(|(id, _)| id_matches(id, raw)) {
        return Resolution::Found(id.clone(), tag);
    }
    if let Some(id) = state.visited.iter().find(|id| id_matches(id, raw)) {
        return Resolution::Rejected(format!("{id} was already analyzed"));
    }
    let Some(name) = requested_name(raw) else {
        return Resolution::Rejected(format!("{raw:?} does not name a method"));
    };
    // Whole-index fallback: exact name, first three ids.
    let mut hits = store.find_by_name(&name);
    hits.truncate(3);
    if hits.is_empty() {
        return Resolution::Rejected(format!("no indexed method is named {name}"));
    }
    let fresh: Vec<&MethodId> = hits.iter().filter(|h| !state.is_visited(h)).collect();
    match fresh.iter().find(|h| id_matches(h, raw)).or(fresh.first()) {
        Some(id) => Resolution::Found((*id).clone(), "name search"),
        None => Resolution::Rejected(format!("every method named {name} was already analyzed")),
    }
}

fn resolve_known(state: &AgentState, store: &GraphStore, raw: &str) -> Option<MethodId> {
    let known = state.visited.iter().chain(&state.frame_methods);
    if let Some(id) = known.into_iter().find(|id| id_matches(id, raw)) {
        return Some(id.clone());
    }
    let name = requested_name(raw)?;
    store.find_by_name(&name).into_iter().find(|id| id_matches(id, raw))
}

fn apply_candidates(state: &mut AgentState, store: &GraphStore, list: &[Value]) -> Vec<MethodId> {
    let mut touched = Vec::new();
    for item in list {
        let (raw, note) = match item {
            Value::String(s) => (s.as_str(), ""),
            Value::Object(o) => (
                o.get("method").and_then(Value::as_str).unwrap_or(""),
                o.get("note").and_then(Value::as_str).unwrap_or(""),
            ),
            _ => continue,
        };
        let Some(id) = resolve_known(state, store, raw.trim()) else {
            continue;
        };
        let note = note.trim().to_string();
        match state.candidates.iter_mut().find(|c| c.id == id) {
            Some(c) if c.note == note => continue,
            Some(c) => c.note = note,
            None => state.candidates.push(Candidate { id: id.clone(), note }),
        }
        touched.push(id);
    }
    touched
}

fn cap_body(body: &str, max: usize) -> String {
    if body.len() <= max {
        return body.to_string();
    }
    let mut end = max;
    while !body.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}{TRUNCATION_MARKER}", &body[..end])
}

/// History lines, dropping the oldest until the rest fits `tokens`.
fn history_section(state: &AgentState, settings: &EnhanceSettings, tokens: usize) -> String {
    let lines: Vec<String> = state.history.iter().map(HistoryEntry::line).collect();
    let est = settings.estimator.as_ref();
    let mut used = 0;
    let mut keep = 0;
    for l in lines.iter().rev() {
        let c = est.estimate(l) + 1;
        if used + c > tokens {
            break;
        }
        used += c;
        keep += 1;
    }
    let mut out = String::new();
    let skipped = lines.len() - keep;
    if skipped > 0 {
        let _ = writeln!(out, "({skipped} earlier entries omitted)");
    }
    for l in &lines[skipped..] {
        out.push_str(l);
        out.push('\n');
    }
    out
}

fn candidates_section(cands: &[Candidate]) -> String {
    let mut out = String::new();
    for c in cands {
        if c.note.is_empty() {
            let _ = writeln!(out, "- {}", c.id);
        } else {
            let _ = writeln!(out, "- {}: {}", c.id, c.note);
        }
    }
    out
}

fn step_prompt(
    state: &AgentState,
    offered: &[(MethodId, &'static str)],
    settings: &EnhanceSettings,
    budget: &AgentBudget,
) -> String {
    let mut out = String::new();
    let _ = write!(out, "## Crash report {}\nTitle: {}\n\n", state.report_id, state.title);
    if !state.trace.frames.is_empty() {
        let _ = write!(out, "## Stack trace\n{}\n", state.trace.render());
    }
    out.push_str("## Analysis history\n");
    if state.history.is_empty() {
        out.push_str("(empty)\n");
    } else {
        out.push_str(&history_section(state, settings, budget.token_budget));
    }
    out.push_str("\n## Suspected methods\n");
    if state.candidates.is_empty() {
        out.push_str("(none)\n");
    } else {
        out.push_str(&candidates_section(&state.candidates));
    }
    if let Some(m) = &state.last_retrieved {
        let mut shown = m.clone();
        shown.body_text = cap_body(&m.body_text, budget.max_method_bytes);
        let _ = write!(out, "\n## Last retrieved method\n{}", method_block(&shown));
    } else {
        out.push('\n');
    }
    out.push_str("## Methods you can request\n");
    if offered.is_empty() {
        out.push_str("(none left)\n");
    }
    for (id, tag) in offered {
        let _ = writeln!(out, "- {id} ({tag})");
    }
    if let Some(f) = &state.feedback {
        let _ = write!(out, "\n## Note\n{f}\n");
    }
    out
}

/// One model round: request a method, update suspects or conclude.
pub fn agent_step(
    state: &mut AgentState,
    store: &GraphStore,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
    budget: &AgentBudget,
) -> Result<StepOutcome, EnhanceError> {
    let offered = offers(state, store)?;
    let messages = vec![
        Message::system(AGENT_TEMPLATE),
        Message::user(step_prompt(state, &offered, settings, budget)),
    ];
    let reply = client.complete(&messages, &settings.params, transcript)?;
    state.steps += 1;
    state.feedback = None;
    let step = state.steps;
    let mut retrieved = false;
    let mut outcome = StepOutcome::Continue;

    let (entry, ct_changed) = match parse_structured(&reply, &["action"]) {
        Err(e) => {
            state.feedback = Some(format!(
                "Your last reply could not be used ({}). Reply with one JSON object using one of the three actions.",
                e.message
            ));
            (reason(step, format!("reply not usable: {}", e.message)), false)
        }
        Ok(fields) => {
            let touched = match fields.get("candidates").and_then(Value::as_array) {
                Some(list) => apply_candidates(state, store, list),
                None => Vec::new(),
            };
            let action = fields.get("action").and_then(Value::as_str).unwrap_or("");
            let entry = match action {
                "provide_method" => {
                    let raw = string(&fields, "method");
                    match resolve_request(state, store, &offered, &raw) {
                        Resolution::Found(id, tag) => match store.lookup(&id) {
                            Some(node) => {
                                state.visited.push(id.clone());
                                state.current = Some(id.clone());
                                state.last_retrieved = Some(node.clone());
                                retrieved = true;
                                HistoryEntry {
                                    step,
                                    action: Action::Retrieve,
                                    method: Some(id),
                                    note: format!("retrieved via {tag}"),
                                }
                            }
                            None => reason(step, format!("{id} is not in the index")),
                        },
                        Resolution::Rejected(why) => {
                            state.feedback = Some(format!("Request rejected: {why}."));
                            reason(step, format!("request rejected: {why}"))
                        }
                    }
                }
                "update_candidates" if touched.is_empty() => {
                    reason(step, "candidate update changed nothing".into())
                }
                "update_candidates" => {
                    let names: Vec<String> = touched.iter().map(MethodId::location).collect();
                    reason(step, format!("suspects updated: {}", names.join(", ")))
                }
                "conclude" => {
                    let root = string(&fields, "root_cause");
                    state.conclusion = Some(root.clone());
                    outcome = StepOutcome::Concluded;
                    HistoryEntry {
                        step,
                        action: Action::Conclude,
                        method: state.current.clone(),
                        note: if root.is_empty() { "concluded".into() } else { root },
                    }
                }
                other => {
                    state.feedback = Some(format!(
                        "Unknown action {other:?}. Use provide_method, update_candidates or conclude."
                    ));
                    reason(step, format!("unknown action {other:?}"))
                }
            };
            (entry, !touched.is_empty())
        }
    };
    if retrieved || ct_changed {
        state.idle_streak = 0;
    } else {
        state.idle_streak += 1;
    }
    state.history.push(entry);
    Ok(outcome)
}

fn reason(step: usize, note: String) -> HistoryEntry {
    HistoryEntry {
        step,
        action: Action::Reason,
        method: None,
        note,
    }
}

fn string(fields: &Map<String, Value>, key: &str) -> String {
    match fields.get(key) {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Null) | None => String::new(),
        Some(other) => other.to_string(),
    }
}

fn run(
    report: &CrashReport,
    trace: &StackTrace,
    store: &GraphStore,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
    budget: &AgentBudget,
) -> Result<(AgentRun, FrameSelection), EnhanceError> {
    let frames = select_frame_methods(trace, store);
    let mut state = AgentState::start(report, trace, &frames);
    let termination = loop {
        if state.steps >= budget.max_steps {
            break Termination::BudgetStop;
        }
        if agent_step(&mut state, store, client, transcript, settings, budget)? == StepOutcome::Concluded {
            break Termination::Concluded;
        }
        if state.idle_streak >= 2 {
            break Termination::Stalled;
        }
        if frontier(&state, store)?.is_empty() {
            break Termination::FrontierExhausted;
        }
    };
    log::debug!("{}: agent stopped after {} step(s): {termination:?}", report.id, state.steps);
    let run = AgentRun {
        analyzed: state.visited,
        history: state.history,
        candidates: state.candidates,
        termination,
        steps: state.steps,
        conclusion: state.conclusion,
    };
    Ok((run, frames))
}

/// Traverses the call graph from the topmost frame method until the model
/// concludes, nothing reachable is left, progress stalls or the step budget
/// runs out.
pub fn run_agent(
    report: &CrashReport,
    trace: &StackTrace,
    store: &GraphStore,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
    budget: &AgentBudget,
) -> Result<AgentRun, EnhanceError> {
    run(report, trace, store, client, transcript, settings, budget).map(|(r, _)| r)
}

/// Agent traversal followed by one report completion over the frame
/// methods, the analyzed methods and the history.
pub fn enhance_agentic(
    report: &CrashReport,
    trace: &StackTrace,
    store: &GraphStore,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
    budget: &AgentBudget,
) -> Result<EnhanceOutcome, EnhanceError> {
    let start = transcript.position();
    let (agent, frames) = run(report, trace, store, client, transcript, settings, budget)?;
    let mut methods = frames.methods.clone();
    for id in &agent.analyzed {
        if !methods.iter().any(|m| m.id == *id) {
            if let Some(node) = store.lookup(id) {
                methods.push(node.clone());
            }
        }
    }
    let history = (!agent.history.is_empty()).then(|| {
        agent
            .history
            .iter()
            .map(|e| e.line() + "\n")
            .collect::<String>()
    });
    let candidates = (!agent.candidates.is_empty()).then(|| candidates_section(&agent.candidates));
    let prompt = ReportPrompt {
        report,
        trace,
        history,
        candidates,
    };
    let fallback = fallback_location(&frames, trace);
    let allow_retry = agent.steps + 2 <= budget.max_steps + 1;
    let w = write_report(
        &prompt,
        &methods,
        Provenance::Agentic,
        Some(&agent.analyzed),
        &fallback,
        client,
        transcript,
        settings,
        allow_retry,
    )?;
    Ok(EnhanceOutcome {
        report: w.report,
        completions: agent.steps + w.completions,
        usage: usage_since(transcript, start),
        unmapped_frames: frames.unmapped,
        dropped_methods: w.truncation.dropped,
        body_truncated: w.truncation.body_truncated,
        agent: Some(agent),
    })
}
