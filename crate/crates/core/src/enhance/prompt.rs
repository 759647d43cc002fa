use std::fmt::Write;

use crate::ingest::{CrashReport, StackTrace};
use crate::jindex::MethodNode;

pub const REPORT_TEMPLATE: &str = include_str!("../../templates/report.txt");
pub const AGENT_TEMPLATE: &str = include_str!("../../templates/agent.txt");

pub fn method_block(m: &MethodNode) -> String {
    format!("### {}\n```java\n{}\n```\n\n", m.id, m.body_text)
}

/// The report prompt's user message with its method section left out.
pub(crate) struct ReportPrompt<'a> {
    pub report: &'a CrashReport,
    pub trace: &'a StackTrace,
    pub history: Option<String>,
    pub candidates: Option<String>,
}

impl ReportPrompt<'_> {
    pub fn render(&self, methods: &[MethodNode]) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "## Crash report {}\nTitle: {}\n\n{}\n\n",
            self.report.id,
            self.report.title.trim(),
            self.report.description.trim()
        );
        if !self.trace.frames.is_empty() {
            let _ = write!(out, "## Stack trace\n{}\n", self.trace.render());
        }
        if !methods.is_empty() {
            out.push_str("## Method source code\n");
            for m in methods {
                out.push_str(&method_block(m));
            }
        }
        if let Some(h) = &self.history {
            let _ = write!(out, "## Analysis history\n{h}\n");
        }
        if let Some(c) = &self.candidates {
            let _ = write!(out, "## Suspected methods\n{c}\n");
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}
