use std::time::Instant;

use crashctx_core::ingest::{
    extract_stack_traces, parse_report, passes_filters, CrashReport, Priority, StackTrace,
};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    description: String,
    expected: Vec<ExpectedTrace>,
}

#[derive(Deserialize)]
struct ExpectedTrace {
    headers: Vec<Option<String>>,
    frames: Vec<String>,
}

fn cases() -> Vec<Case> {
    let text = include_str!("fixtures/extraction/cases.json");
    serde_json::from_str(text).unwrap()
}

fn flatten(trace: &StackTrace) -> (Vec<Option<String>>, Vec<String>) {
    let headers = trace.headers.iter().map(|h| h.exception_type.clone()).collect();
    let frames = trace
        .frames
        .iter()
        .map(|f| format!("{}|{}|{}|{}", f.class_fqn, f.method_name, f.file_name, f.line))
        .collect();
    (headers, frames)
}

/// Mismatching case names; empty when the extractor reproduces the oracle.
pub fn oracle_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for case in cases() {
        let got: Vec<_> = extract_stack_traces(&case.description).iter().map(flatten).collect();
        let want: Vec<_> = case
            .expected
            .iter()
            .map(|t| (t.headers.clone(), t.frames.clone()))
            .collect();
        if got != want {
            bad.push(format!("{}: got {got:?}", case.name));
        }
    }
    bad
}

#[test]
fn hand_labeled_oracle() {
    check_hand_labeled_oracle();
}

pub fn check_hand_labeled_oracle() {
    let start = Instant::now();
    let cases = cases();
    assert_eq!(cases.len(), 20);
    let bad = oracle_mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn frames_satisfy_invariants() {
    for case in cases() {
        for t in extract_stack_traces(&case.description) {
            assert!(!t.frames.is_empty());
            for f in t.frames {
                assert!(f.file_name.ends_with(".java"));
                assert!(f.line >= 1);
            }
        }
    }
}

#[test]
fn filter_examples() {
    let base = |priority: &str, created: &str| {
        parse_report(&format!(
            r#"{{"id":"YARN-7","title":"t","description":"java.lang.NullPointerException\n\tat a.B.c(B.java:3)","created_at":"{created}","priority":"{priority}","status":"Resolved","fix_commit":"abc"}}"#
        ))
        .unwrap()
    };
    assert!(passes_filters(&base("Major", "2015-06-01T00:00:00Z")));
    assert!(!passes_filters(&base("Minor", "2015-06-01T00:00:00Z")));
    assert!(!passes_filters(&base("Major", "2009-12-31T00:00:00Z")));
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,6}"
}

fn class_name() -> impl Strategy<Value = String> {
    ("[A-Z][a-z]{1,6}", proptest::option::of("[A-Z][a-z]{1,4}")).prop_map(|(c, inner)| match inner {
        Some(i) => format!("{c}${i}"),
        None => c,
    })
}

fn frame_line() -> impl Strategy<Value = String> {
    (proptest::collection::vec(ident(), 1..4), class_name(), ident(), 1u32..5000).prop_map(
        |(pkg, class, method, line)| {
            let file = class.split('$').next().unwrap().to_string();
            format!("\tat {}.{class}.{method}({file}.java:{line})", pkg.join("."))
        },
    )
}

fn trace_block() -> impl Strategy<Value = String> {
    (
        "[A-Z][a-z]{2,8}(Exception|Error)",
        proptest::collection::vec(frame_line(), 1..6),
        proptest::option::of(proptest::collection::vec(frame_line(), 1..4)),
    )
        .prop_map(|(ty, frames, cause)| {
            let mut s = format!("java.lang.{ty}: boom\n{}\n", frames.join("\n"));
            if let Some(c) = cause {
                s.push_str(&format!("Caused by: java.io.IOException: inner\n{}\n\t... 3 more\n", c.join("\n")));
            }
            s
        })
}

fn prose() -> impl Strategy<Value = String> {
    "[a-z ]{0,40}".prop_map(|s| format!("{s}\n"))
}

fn description() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![trace_block(), prose()], 0..5).prop_map(|parts| parts.concat())
}

fn frames_of(traces: &[StackTrace]) -> Vec<String> {
    traces.iter().flat_map(|t| t.frames.iter().map(|f| f.to_string())).collect()
}

proptest! {
    #[test]
    fn extraction_is_idempotent(desc in description()) {
        for t in extract_stack_traces(&desc) {
            let again = extract_stack_traces(&t.render());
            prop_assert_eq!(again.len(), 1);
            prop_assert_eq!(&again[0].frames, &t.frames);
        }
    }

    #[test]
    fn concatenation_is_union(a in description(), b in description()) {
        let joined = format!("{a}{b}");
        let mut want = extract_stack_traces(&a);
        want.extend(extract_stack_traces(&b));
        let got = extract_stack_traces(&joined);
        prop_assert_eq!(frames_of(&got), frames_of(&want));
        prop_assert_eq!(got.len(), want.len());
    }

    #[test]
    fn filters_monotone_in_priority(p in 0usize..6, q in 0usize..6, year in 2005i32..2020) {
        let levels = [Priority::Unknown, Priority::Trivial, Priority::Minor, Priority::Major, Priority::Critical, Priority::Blocker];
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let mut r: CrashReport = parse_report(&format!(
            r#"{{"id":"HIVE-1","description":"java.lang.Error\n\tat a.B.c(B.java:2)","created_at":"{year}-03-01","status":"Fixed","fix_commit":"c"}}"#
        )).unwrap();
        r.priority = levels[lo];
        let low = passes_filters(&r);
        r.priority = levels[hi];
        prop_assert!(!low || passes_filters(&r));
    }
}
