//! Presence of the four report attributes developers rely on most, and the
//! completeness levels of enhanced reports.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::enhance::{EnhancedReport, UNKNOWN};
use crate::ingest::CrashReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FieldPresence {
    pub steps: bool,
    pub root_cause: bool,
    pub component: bool,
    pub fix: bool,
}

impl FieldPresence {
    pub fn as_array(&self) -> [bool; 4] {
        [self.steps, self.root_cause, self.component, self.fix]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum AuditInput<'a> {
    Raw(&'a CrashReport),
    Enhanced(&'a EnhancedReport),
}

static TRACE_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(at\s+[\w$.<>]+\(.*\)|\.\.\. \d+ more|Caused by:.*|(Exception in thread .*)|[\w$]+(\.[\w$]+)+(Exception|Error|Throwable)(:.*)?)\s*$")
        .unwrap()
});
static STEPS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)(steps to reproduce|(to|how to) reproduce|reproduc(ible|ed|es) (with|by|when|on)|^\s*steps\s*:|^\s*(run|execute)\s*:)")
        .unwrap()
});
static LIST_ITEM: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^\s*(\d+[.)]|[-*])\s+\S").unwrap());
static ROOT_CAUSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(root cause|because|due to|the (problem|issue|bug) is|is caused by|which is why|assumes?|does not|doesn't|never|not (handled|cleared|closed|checked))\b")
        .unwrap()
});
static CODE_ENTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b([A-Z][a-z0-9]+(?:[A-Z][a-z0-9]*)+|[a-z][a-z0-9]*(?:[A-Z][a-z0-9]*)+|[\w$]+\.java|[A-Z][\w$]*\.[a-z][\w$]*)\b").unwrap()
});
static METHOD_ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b([A-Z][\w$]*\.[a-z][\w$]*|[a-z][a-z0-9]*(?:[A-Z][a-z0-9]*)+\s*\()").unwrap());
static FIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(fix|patch|workaround|instead of|would avoid|proposed|suggest(ed|ion)?|we could|should (check|be|return|clear|handle|use|close))\b")
        .unwrap()
});

fn prose(description: &str) -> String {
    description
        .lines()
        .filter(|l| !TRACE_LINE.is_match(l))
        .collect::<Vec<_>>()
        .join("\n")
}

fn mentions_component(text: &str) -> bool {
    CODE_ENTITY.find_iter(text).any(|m| {
        let w = m.as_str();
        !(w.ends_with("Exception") || w.ends_with("Error"))
    })
}

fn raw_presence(report: &CrashReport) -> FieldPresence {
    let text = prose(&report.description);
    FieldPresence {
        steps: STEPS.is_match(&text) || LIST_ITEM.find_iter(&text).count() >= 2,
        root_cause: ROOT_CAUSE.is_match(&text),
        component: mentions_component(&text),
        fix: FIX.is_match(&text),
    }
}

fn stated(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty() && s != UNKNOWN
}

/// Raw reports are judged on the prose of their description with
/// stack-trace lines removed. Enhanced reports count a field when it is
/// not the unknown sentinel.
pub fn audit_fields(input: AuditInput<'_>) -> FieldPresence {
    match input {
        AuditInput::Raw(r) => raw_presence(r),
        AuditInput::Enhanced(e) => FieldPresence {
            steps: e.steps_to_reproduce.iter().any(|s| stated(s)),
            root_cause: stated(&e.root_cause),
            component: e.problem_location.iter().any(|l| stated(l) && !l.starts_with("unknown#")),
            fix: stated(&e.possible_fix) || stated(&e.repair_suggestion),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocationLevel {
    Method,
    Class,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairLevel {
    /// A concrete code change.
    Code,
    /// Guidance without code.
    Guidance,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completeness {
    pub location: LocationLevel,
    pub root_cause: bool,
    pub repair: RepairLevel,
}

pub fn completeness(input: AuditInput<'_>) -> Completeness {
    match input {
        AuditInput::Raw(r) => {
            let text = prose(&r.description);
            let location = if METHOD_ENTITY.is_match(&text) {
                LocationLevel::Method
            } else if mentions_component(&text) {
                LocationLevel::Class
            } else {
                LocationLevel::Absent
            };
            let repair = if !FIX.is_match(&text) {
                RepairLevel::Absent
            } else if text.lines().any(|l| l.trim_end().ends_with(';') || l.trim_end().ends_with('{')) {
                RepairLevel::Code
            } else {
                RepairLevel::Guidance
            };
            Completeness {
                location,
                root_cause: ROOT_CAUSE.is_match(&text),
                repair,
            }
        }
        AuditInput::Enhanced(e) => {
            let location = if e.problem_location.iter().any(|l| !l.starts_with("unknown#") && !l.ends_with("#unknown")) {
                LocationLevel::Method
            } else if e.problem_location.iter().any(|l| !l.starts_with("unknown#")) {
                LocationLevel::Class
            } else {
                LocationLevel::Absent
            };
            let repair = if stated(&e.possible_fix) {
                RepairLevel::Code
            } else if stated(&e.repair_suggestion) {
                RepairLevel::Guidance
            } else {
                RepairLevel::Absent
            };
            Completeness {
                location,
                root_cause: stated(&e.root_cause),
                repair,
            }
        }
    }
}
