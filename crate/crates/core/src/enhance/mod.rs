//! Report enhancement: the single-shot pipeline over stack-trace methods and
//! the agentic pipeline that walks the call graph before writing the report.

mod agent;
mod direct;
mod prompt;
mod render;
mod truncate;

pub use agent::{
    agent_step, enhance_agentic, frontier, run_agent, Action, AgentRun, AgentState, Candidate,
    HistoryEntry, StepOutcome, Termination,
};
pub use direct::{enhance_direct, select_frame_methods, FrameSelection};
pub use prompt::{method_block, AGENT_TEMPLATE, REPORT_TEMPLATE};
pub use render::render_markdown;
pub use truncate::{method_cost, truncate_for_budget, Truncation, TRUNCATION_MARKER};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::jindex::{is_valid_location, MethodId};
use crate::llm::{ByteEstimator, ChatParams, LlmError, StructuredError, TokenEstimator, Usage};
use crate::store::StoreError;

/// Written into any field the model left empty.
pub const UNKNOWN: &str = "unknown";

/// Keys a model reply must carry.
pub const REPORT_FIELDS: [&str; 5] = [
    "root_cause",
    "steps_to_reproduce",
    "problem_location",
    "repair_suggestion",
    "possible_fix",
];

/// Keys of the stored document, in order.
pub const DOCUMENT_KEYS: [&str; 8] = [
    "report_id",
    "provenance",
    "root_cause",
    "steps_to_reproduce",
    "problem_location",
    "repair_suggestion",
    "possible_fix",
    "evidence",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Direct,
    Agentic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhancedReport {
    pub report_id: String,
    pub provenance: Provenance,
    pub root_cause: String,
    pub steps_to_reproduce: Vec<String>,
    pub problem_location: Vec<String>,
    pub repair_suggestion: String,
    pub possible_fix: String,
    pub evidence: Vec<String>,
}

impl EnhancedReport {
    /// Pretty JSON with a trailing newline. Stable for identical input.
    pub fn to_document(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_document(text: &str) -> Result<Self, SchemaError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| SchemaError(format!("not JSON: {e}")))?;
        validate_document(&value)?;
        serde_json::from_value(value).map_err(|e| SchemaError(e.to_string()))
    }

    /// Locations as written, each parsed back into class and method.
    pub fn locations(&self) -> Vec<(String, String)> {
        self.problem_location
            .iter()
            .filter_map(|l| l.split_once('#'))
            .map(|(c, m)| (c.to_string(), m.to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid report document: {0}")]
pub struct SchemaError(pub String);

/// Checks a stored document: exactly the expected keys, five non-empty
/// diagnostic fields, well-formed locations and evidence ids.
pub fn validate_document(value: &Value) -> Result<(), SchemaError> {
    let err = |m: String| Err(SchemaError(m));
    let Some(map) = value.as_object() else {
        return err("not an object".into());
    };
    for key in DOCUMENT_KEYS {
        if !map.contains_key(key) {
            return err(format!("missing key {key}"));
        }
    }
    if let Some(extra) = map.keys().find(|k| !DOCUMENT_KEYS.contains(&k.as_str())) {
        return err(format!("unexpected key {extra}"));
    }
    for key in ["report_id", "root_cause", "repair_suggestion", "possible_fix"] {
        match map[key].as_str() {
            Some(s) if !s.trim().is_empty() => {}
            _ => return err(format!("{key} must be a non-empty string")),
        }
    }
    if !matches!(map["provenance"].as_str(), Some("direct" | "agentic")) {
        return err("provenance must be direct or agentic".into());
    }
    let list = |key: &str| -> Result<Vec<&str>, SchemaError> {
        let items = map[key]
            .as_array()
            .ok_or_else(|| SchemaError(format!("{key} must be a list")))?;
        items
            .iter()
            .map(|v| {
                v.as_str()
                    .filter(|s| !s.trim().is_empty())
                    .ok_or_else(|| SchemaError(format!("{key} holds a non-string or empty entry")))
            })
            .collect()
    };
    if list("steps_to_reproduce")?.is_empty() {
        return err("steps_to_reproduce is empty".into());
    }
    let locations = list("problem_location")?;
    if locations.is_empty() {
        return err("problem_location is empty".into());
    }
    if let Some(bad) = locations.iter().find(|l| !is_valid_location(l)) {
        return err(format!("bad location {bad:?}"));
    }
    if let Some(bad) = list("evidence")?.iter().find(|e| e.parse::<MethodId>().is_err()) {
        return err(format!("bad evidence id {bad:?}"));
    }
    Ok(())
}

/// Rewrites the common ways a model names a method into `class#method`:
/// full method ids, `a.B.c(..)`, `a.B::c` and `a.B#c(int)`. A method named
/// after its class is taken to be the constructor.
pub fn normalize_location(raw: &str) -> Option<String> {
    let mut s = raw.trim().trim_matches('`').trim();
    if let Ok(id) = s.parse::<MethodId>() {
        return Some(id.location());
    }
    if let Some(p) = s.find('(') {
        s = &s[..p];
    }
    let s = s.trim().replace("::", "#");
    let (class, method) = match s.split_once('#') {
        Some((c, m)) => (c, m.split('/').next().unwrap_or(m)),
        None => s.rsplit_once('.')?,
    };
    // Constructors are indexed as `<init>`; models usually name them after the class.
    let simple = class.rsplit(['.', '$']).next().unwrap_or(class);
    let method = if method == simple { "<init>" } else { method };
    let loc = format!("{class}#{method}");
    is_valid_location(&loc).then_some(loc)
}

fn text_field(v: Option<&Value>) -> String {
    let s = match v {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Null) | None => String::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Some(other) => other.to_string(),
    };
    if s.is_empty() {
        UNKNOWN.into()
    } else {
        s
    }
}

fn list_field(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => s.trim().to_string(),
                other => other.to_string(),
            })
            .filter(|s| !s.is_empty())
            .collect(),
        Some(Value::String(s)) => s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        _ => Vec::new(),
    }
}

/// Drops a surrounding Markdown code fence.
fn strip_fence(code: &str) -> String {
    let t = code.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let body = rest.split_once('\n').map_or("", |(_, b)| b);
        return body.trim_end().trim_end_matches("```").trim_end().to_string();
    }
    t.to_string()
}

/// Turns a parsed reply into a total report. `fallback_location` fills
/// problem_location when the reply names no usable method.
pub fn report_from_fields(
    report_id: &str,
    provenance: Provenance,
    fields: &Map<String, Value>,
    evidence: &[MethodId],
    fallback_location: &str,
) -> EnhancedReport {
    let mut steps = list_field(fields.get("steps_to_reproduce"));
    if steps.is_empty() {
        steps.push(UNKNOWN.into());
    }
    let mut locations: Vec<String> = Vec::new();
    for raw in list_field(fields.get("problem_location")) {
        if let Some(loc) = normalize_location(&raw) {
            if !locations.contains(&loc) {
                locations.push(loc);
            }
        }
    }
    if locations.is_empty() {
        locations.push(fallback_location.to_string());
    }
    let mut fix = strip_fence(&text_field(fields.get("possible_fix")));
    if fix.is_empty() {
        fix = UNKNOWN.into();
    }
    EnhancedReport {
        report_id: report_id.to_string(),
        provenance,
        root_cause: text_field(fields.get("root_cause")),
        steps_to_reproduce: steps,
        problem_location: locations,
        repair_suggestion: text_field(fields.get("repair_suggestion")),
        possible_fix: fix,
        evidence: evidence.iter().map(ToString::to_string).collect(),
    }
}

/// Limits of the agentic traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentBudget {
    pub max_steps: usize,
    /// Bytes of a retrieved body shown to the model.
    pub max_method_bytes: usize,
    /// Tokens allotted to the history section of each step prompt.
    pub token_budget: usize,
}

impl Default for AgentBudget {
    fn default() -> Self {
        Self {
            max_steps: 12,
            max_method_bytes: 16_000,
            token_budget: 8_000,
        }
    }
}

impl AgentBudget {
    /// `max_steps` may be zero; the byte and token limits may not.
    pub fn validate(&self) -> Result<(), String> {
        if self.max_method_bytes == 0 || self.token_budget == 0 {
            return Err("max_method_bytes and token_budget must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct EnhanceSettings {
    pub params: ChatParams,
    /// Model context window in tokens.
    pub context_tokens: usize,
    pub estimator: Arc<dyn TokenEstimator>,
}

impl Default for EnhanceSettings {
    fn default() -> Self {
        Self {
            params: ChatParams::default(),
            context_tokens: 128_000,
            estimator: Arc::new(ByteEstimator),
        }
    }
}

impl std::fmt::Debug for EnhanceSettings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnhanceSettings")
            .field("params", &self.params)
            .field("context_tokens", &self.context_tokens)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnhanceError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{report_id}: unusable reply after reformat retry: {error}")]
    Structured {
        report_id: String,
                error: StructuredError,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl EnhanceError {
    pub fn is_systemic(&self) -> bool {
        matches!(self, EnhanceError::Llm(e) if e.is_systemic())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceOutcome {
    pub report: EnhancedReport,
    pub completions: usize,
    pub usage: Usage,
    /// Frames that named no indexed method.
    pub unmapped_frames: usize,
    /// Methods cut from the final prompt to fit the context window.
    pub dropped_methods: usize,
    pub body_truncated: bool,
    pub agent: Option<AgentRun>,
}
