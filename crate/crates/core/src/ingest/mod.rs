//! Crash-report records: parsing, corpus loading and dataset filters.

mod trace;

pub use trace::{
    extract_stack_traces, extract_with_tally, ExceptionHeader, ExtractionTally, StackFrame,
    StackTrace,
};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{source_name}: not a valid record document: {message}")]
    Malformed { source_name: String, message: String },
    #[error("{source_name}: {field} absent")]
    MissingField {
        source_name: String,
        field: &'static str,
    },
    #[error("{source_name}: field {field}: {message}")]
    InvalidField {
        source_name: String,
        field: &'static str,
        message: String,
    },
    #[error("duplicate report id {0}")]
    DuplicateId(String),
    #[error("reading {path}: {error}")]
    Io {
        path: String,
                error: std::io::Error,
    },
}

/// Ordered by severity so that filters are monotone in priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    Unknown,
    Trivial,
    Minor,
    Major,
    Critical,
    Blocker,
}

impl Priority {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "blocker" => Priority::Blocker,
            "critical" => Priority::Critical,
            "major" => Priority::Major,
            "minor" => Priority::Minor,
            "trivial" => Priority::Trivial,
            _ => Priority::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Resolved,
    Fixed,
    Other,
}

impl Status {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "resolved" => Status::Resolved,
            "fixed" => Status::Fixed,
            _ => Status::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashReport {
    pub id: String,
    pub title: String,
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub priority: Priority,
    pub status: Status,
    pub fix_commit: Option<String>,
}

impl CrashReport {
    /// Project key of a tracker id: `ZOOKEEPER-2581` gives `ZOOKEEPER`.
    pub fn system(&self) -> &str {
        system_of(&self.id)
    }

    /// Title and description, the text a reader of the raw report sees.
    pub fn full_text(&self) -> String {
        format!("{}\n{}", self.title, self.description)
    }
}

pub fn system_of(id: &str) -> &str {
    id.rsplit_once('-').map_or(id, |(p, _)| p)
}

/// Parses ISO-8601 timestamps; offsets without a colon (`+0000`, as
/// tracker exports write them) and bare dates are accepted.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(t) = DateTime::parse_from_str(s, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Utc.from_utc_datetime(&t));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap()))
}

fn text_field(
    obj: &serde_json::Map<String, Value>,
    field: &'static str,
    source_name: &str,
) -> Result<Option<String>, IngestError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(IngestError::InvalidField {
            source_name: source_name.to_string(),
            field,
            message: format!("expected a string, found {other}"),
        }),
    }
}

fn required(
    obj: &serde_json::Map<String, Value>,
    field: &'static str,
    source_name: &str,
) -> Result<String, IngestError> {
    text_field(obj, field, source_name)?.ok_or_else(|| IngestError::MissingField {
        source_name: source_name.to_string(),
        field,
    })
}

/// Parses one exported tracker record. Fields other than the retained ones
/// are ignored; unknown priorities and statuses map to `Unknown`/`Other`.
pub fn parse_report(raw: &str) -> Result<CrashReport, IngestError> {
    parse_report_named(raw, "record")
}

fn parse_report_named(raw: &str, source_name: &str) -> Result<CrashReport, IngestError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| IngestError::Malformed {
        source_name: source_name.to_string(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(IngestError::Malformed {
            source_name: source_name.to_string(),
            message: "expected an object".into(),
        });
    };
    let id = required(&obj, "id", source_name)?;
    if id.trim().is_empty() {
        return Err(IngestError::InvalidField {
            source_name: source_name.to_string(),
            field: "id",
            message: "empty".into(),
        });
    }
    let source_name = id.as_str();
    let title = text_field(&obj, "title", source_name)?.unwrap_or_default();
    let description = required(&obj, "description", source_name)?;
    let created_raw = required(&obj, "created_at", source_name)?;
    let created_at = parse_timestamp(&created_raw).ok_or_else(|| IngestError::InvalidField {
        source_name: source_name.to_string(),
        field: "created_at",
        message: format!("not an ISO-8601 timestamp: {created_raw:?}"),
    })?;
    let priority = text_field(&obj, "priority", source_name)?
        .map_or(Priority::Unknown, |p| Priority::parse(&p));
    let status = text_field(&obj, "status", source_name)?.map_or(Status::Other, |s| Status::parse(&s));
    let fix_commit = match obj.get("fix_commit") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(Value::String(s)) => Some(s.trim().to_string()),
        Some(Value::Array(items)) => {
            let commits: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
            if commits.len() > 1 {
                log::info!("{id}: {} fix commits linked, using the first", commits.len());
            }
            commits.first().map(|s| s.to_string())
        }
        Some(other) => {
            return Err(IngestError::InvalidField {
                source_name: source_name.to_string(),
                field: "fix_commit",
                message: format!("expected a commit id, found {other}"),
            })
        }
    };
    Ok(CrashReport {
        id: id.clone(),
        title,
        description,
        created_at,
        priority,
        status,
        fix_commit,
    })
}

/// Loads a corpus from a directory of `*.json` records or from a
/// line-delimited file. Ids must be unique; records come back sorted by id.
pub fn load_corpus(path: &Path) -> Result<Vec<CrashReport>, IngestError> {
    let io = |e| IngestError::Io {
        path: path.display().to_string(),
        error: e,
    };
    let mut reports = Vec::new();
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(|e| IngestError::Io {
                path: file.display().to_string(),
                error: e,
            })?;
            reports.push(parse_report_named(&text, &file.display().to_string())?);
        }
    } else {
        let text = std::fs::read_to_string(path).map_err(io)?;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let name = format!("{}:{}", path.display(), n + 1);
            reports.push(parse_report_named(line, &name)?);
        }
    }
    let mut seen = HashSet::new();
    for r in &reports {
        if !seen.insert(r.id.as_str()) {
            return Err(IngestError::DuplicateId(r.id.clone()));
        }
    }
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}

/// The dataset filters, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    Status,
    FixCommit,
    Priority,
    Date,
    Trace,
}

impl Filter {
    pub const ALL: [Filter; 5] = [
        Filter::Status,
        Filter::FixCommit,
        Filter::Priority,
        Filter::Date,
        Filter::Trace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Filter::Status => "status",
            Filter::FixCommit => "fix_commit",
            Filter::Priority => "priority",
            Filter::Date => "date",
            Filter::Trace => "trace",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn earliest_allowed() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap()
}

/// First filter the report fails, or `None` when it is retained.
pub fn first_failing_filter(r: &CrashReport) -> Option<Filter> {
    if !matches!(r.status, Status::Resolved | Status::Fixed) {
        return Some(Filter::Status);
    }
    if r.fix_commit.is_none() {
        return Some(Filter::FixCommit);
    }
    if r.priority < Priority::Major {
        return Some(Filter::Priority);
    }
    if r.created_at < earliest_allowed() {
        return Some(Filter::Date);
    }
    if extract_stack_traces(&r.description).is_empty() {
        return Some(Filter::Trace);
    }
    None
}

pub fn passes_filters(r: &CrashReport) -> bool {
    first_failing_filter(r).is_none()
}
