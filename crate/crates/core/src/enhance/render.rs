use std::fmt::Write;

use crate::ingest::CrashReport;

use super::{EnhancedReport, Provenance};

/// Human-readable page: the original report on top, the enhanced sections
/// below it.
pub fn render_markdown(original: &CrashReport, enhanced: &EnhancedReport) -> String {
    let mut out = String::new();
    let mode = match enhanced.provenance {
        Provenance::Direct => "direct",
        Provenance::Agentic => "agentic",
    };
    let _ = writeln!(out, "# {}: {}\n", original.id, original.title.trim());
    let _ = writeln!(
        out,
        "Created {} | priority {:?} | status {:?} | enhanced ({mode})\n",
        original.created_at.format("%Y-%m-%d"),
        original.priority,
        original.status
    );
    out.push_str("## Original Report\n\n");
    for line in original.description.trim().lines() {
        let _ = writeln!(out, "> {line}");
    }
    let _ = write!(out, "\n## Root Cause\n\n{}\n", enhanced.root_cause);
    out.push_str("\n## Steps To Reproduce\n\n");
    for (i, s) in enhanced.steps_to_reproduce.iter().enumerate() {
        let _ = writeln!(out, "{}. {s}", i + 1);
    }
    out.push_str("\n## Problem Location\n\n");
    for l in &enhanced.problem_location {
        let _ = writeln!(out, "- `{l}`");
    }
    let _ = write!(out, "\n## Repair Suggestion\n\n{}\n", enhanced.repair_suggestion);
    let _ = write!(out, "\n## Possible Fix\n\n```java\n{}\n```\n", enhanced.possible_fix);
    if !enhanced.evidence.is_empty() {
        out.push_str("\n## Evidence\n\n");
        for e in &enhanced.evidence {
            let _ = writeln!(out, "- `{e}`");
        }
    }
    out
}
