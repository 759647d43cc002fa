//! Stack-trace extraction from free-form report text.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StackFrame {
    pub class_fqn: String,
    pub method_name: String,
    pub file_name: String,
    pub line: u32,
}

impl fmt::Display for StackFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at {}.{}({}:{})",
            self.class_fqn, self.method_name, self.file_name, self.line
        )
    }
}

/// One entry of an exception chain. `exception_type` is absent when the
/// header line names no recognisable throwable type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionHeader {
    pub exception_type: Option<String>,
    pub message: Option<String>,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackTrace {
    pub headers: Vec<ExceptionHeader>,
    pub frames: Vec<StackFrame>,
}

impl StackTrace {
    /// The outermost exception type, if any header named one.
    pub fn exception_type(&self) -> Option<&str> {
        self.headers.iter().find_map(|h| h.exception_type.as_deref())
    }

    /// Renders the trace in JVM form; feeding the result back through
    /// [`extract_stack_traces`] yields the same frames.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, h) in self.headers.iter().enumerate() {
            if i > 0 && !h.line.starts_with("Caused by:") {
                out.push_str("Caused by: ");
            }
            out.push_str(&h.line);
            out.push('\n');
            if i == 0 {
                for f in &self.frames {
                    out.push('\t');
                    out.push_str(&f.to_string());
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Counters for lines the extractor saw but could not use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionTally {
    pub skipped_frames: usize,
    pub orphan_frames: usize,
    pub dropped_headers: usize,
}

static FRAME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^at\s+(?:[\w.$@-]*/)*((?:[\w$]+\.)+)([\w$<>]+)\(([\w$.-]+\.java):(\d+)\)",
    )
    .unwrap()
});

static NEUTRAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\.\.\.\s*\d+\s+(?:more|common frames omitted)\b").unwrap()
});

static NON_TYPE_CHAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\w$.]+").unwrap());

fn is_frame_like(line: &str) -> bool {
    line == "at" || line.strip_prefix("at").is_some_and(|r| r.starts_with(char::is_whitespace))
}

fn parse_frame(line: &str) -> Option<StackFrame> {
    let caps = FRAME.captures(line)?;
    let line_no: u32 = caps[4].parse().ok()?;
    if line_no == 0 {
        return None;
    }
    Some(StackFrame {
        class_fqn: caps[1].trim_end_matches('.').to_string(),
        method_name: caps[2].to_string(),
        file_name: caps[3].to_string(),
        line: line_no,
    })
}

fn is_header(line: &str) -> bool {
    line.contains("Exception") || line.contains("Error") || line.contains("Caused by:")
}

fn parse_header(line: &str) -> ExceptionHeader {
    let scan = match line.find("Caused by:") {
        Some(i) => &line[i + "Caused by:".len()..],
        None => line,
    };
    let candidates: Vec<&str> = NON_TYPE_CHAR
        .split(scan)
        .map(|t| t.trim_matches('.'))
        .filter(|t| {
            let last = t.rsplit(['.', '$']).next().unwrap_or("");
            last.ends_with("Exception") || last.ends_with("Error")
        })
        .collect();
    let exception_type = candidates
        .iter()
        .find(|t| t.contains('.'))
        .or(candidates.first())
        .map(|t| t.to_string());
    let message = exception_type.as_ref().and_then(|ty| {
        let at = scan.find(ty.as_str())? + ty.len();
        let rest = scan[at..].strip_prefix(':')?.trim();
        (!rest.is_empty()).then(|| rest.to_string())
    });
    ExceptionHeader {
        exception_type,
        message,
        line: line.to_string(),
    }
}

#[derive(Default)]
struct Pending {
    headers: Vec<ExceptionHeader>,
    frames: Vec<StackFrame>,
}

struct Extractor {
    current: Option<Pending>,
    out: Vec<StackTrace>,
    tally: ExtractionTally,
}

impl Extractor {
    fn close(&mut self) {
        if let Some(p) = self.current.take() {
            if p.frames.is_empty() {
                self.tally.dropped_headers += p.headers.len();
            } else {
                self.out.push(StackTrace {
                    headers: p.headers,
                    frames: p.frames,
                });
            }
        }
    }

    fn line(&mut self, raw: &str) {
        let line = raw.trim();
        if is_frame_like(line) {
            match (parse_frame(line), self.current.as_mut()) {
                (Some(frame), Some(p)) => p.frames.push(frame),
                (Some(_), None) => self.tally.orphan_frames += 1,
                (None, _) => self.tally.skipped_frames += 1,
            }
            return;
        }
        if NEUTRAL.is_match(line) {
            return;
        }
        if line.contains("Caused by:") {
            let header = parse_header(line);
            match self.current.as_mut() {
                Some(p) => p.headers.push(header),
                None => {
                    self.current = Some(Pending {
                        headers: vec![header],
                        frames: Vec::new(),
                    })
                }
            }
            return;
        }
        if is_header(line) {
            // a header with no frames yet is superseded by this one
            self.close();
            self.current = Some(Pending {
                headers: vec![parse_header(line)],
                frames: Vec::new(),
            });
            return;
        }
        if self.current.as_ref().is_some_and(|p| !p.frames.is_empty()) {
            self.close();
        }
    }
}

/// Extracts every stack trace embedded in `description`, in textual order.
pub fn extract_stack_traces(description: &str) -> Vec<StackTrace> {
    extract_with_tally(description).0
}

pub fn extract_with_tally(description: &str) -> (Vec<StackTrace>, ExtractionTally) {
    let mut ex = Extractor {
        current: None,
        out: Vec::new(),
        tally: ExtractionTally::default(),
    };
    for line in description.lines() {
        ex.line(line);
    }
    ex.close();
    (ex.out, ex.tally)
}
