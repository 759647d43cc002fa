use crate::ingest::{CrashReport, StackTrace};
use crate::jindex::{is_valid_location, map_frame, normalize_class, MethodId, MethodNode};
use crate::llm::{parse_structured, LlmClient, Message, Transcript, Usage};
use crate::store::GraphStore;

use super::prompt::{ReportPrompt, REPORT_TEMPLATE};
use super::truncate::{truncate_for_budget, Truncation};
use super::{
    report_from_fields, EnhanceError, EnhanceOutcome, EnhanceSettings, EnhancedReport, Provenance,
    REPORT_FIELDS,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSelection {
    /// Topmost first, one entry per method.
    pub methods: Vec<MethodNode>,
    pub unmapped: usize,
}

pub fn select_frame_methods(trace: &StackTrace, store: &GraphStore) -> FrameSelection {
    let mut methods: Vec<MethodNode> = Vec::new();
    let mut unmapped = 0;
    for frame in &trace.frames {
        let Some(id) = map_frame(frame, store.graph()) else {
            unmapped += 1;
            continue;
        };
        if methods.iter().any(|m| m.id == id) {
            continue;
        }
        if let Some(node) = store.lookup(&id) {
            methods.push(node.clone());
        }
    }
    FrameSelection { methods, unmapped }
}

/// Location used when the reply names no method: the topmost indexed frame
/// method, else the topmost frame as written.
pub(crate) fn fallback_location(selection: &FrameSelection, trace: &StackTrace) -> String {
    if let Some(m) = selection.methods.first() {
        return m.id.location();
    }
    trace
        .frames
        .iter()
        .map(|f| format!("{}#{}", normalize_class(&f.class_fqn), f.method_name))
        .find(|l| is_valid_location(l))
        .unwrap_or_else(|| "unknown#unknown".into())
}

pub(crate) fn usage_since(transcript: &Transcript, start: usize) -> Usage {
    let mut u = Usage::default();
    for ex in &transcript.exchanges()[start..transcript.position()] {
        u += ex.usage;
    }
    u
}

pub(crate) struct Written {
    pub report: EnhancedReport,
    pub completions: usize,
    pub truncation: Truncation,
}

/// One report completion over `methods`, with a single reformat request if
/// the reply cannot be parsed and `allow_retry` holds.
#[allow(clippy::too_many_arguments)]
pub(crate) fn write_report(
    prompt: &ReportPrompt<'_>,
    methods: &[MethodNode],
    provenance: Provenance,
    evidence: Option<&[MethodId]>,
    fallback: &str,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
    allow_retry: bool,
) -> Result<Written, EnhanceError> {
    let est = settings.estimator.as_ref();
    let overhead = est.estimate(REPORT_TEMPLATE)
        + est.estimate(&prompt.render(&[]))
        + settings.params.max_output_tokens as usize;
    let truncation = truncate_for_budget(methods, settings.context_tokens, overhead, est);
    let mut messages = vec![
        Message::system(REPORT_TEMPLATE),
        Message::user(prompt.render(&truncation.methods)),
    ];
    let mut completions = 1;
    let reply = client.complete(&messages, &settings.params, transcript)?;
    let fields = match parse_structured(&reply, &REPORT_FIELDS) {
        Ok(f) => f,
        Err(e) if allow_retry => {
            log::warn!("{}: reply not usable ({}), asking once more", prompt.report.id, e.message);
            messages.push(Message::assistant(reply));
            messages.push(Message::user(format!(
                "That reply could not be used: {}. Answer again with only the JSON object described above.",
                e.message
            )));
            completions += 1;
            let again = client.complete(&messages, &settings.params, transcript)?;
            parse_structured(&again, &REPORT_FIELDS).map_err(|source| EnhanceError::Structured {
                report_id: prompt.report.id.clone(),
                error: source,
            })?
        }
        Err(source) => {
            return Err(EnhanceError::Structured {
                report_id: prompt.report.id.clone(),
                error: source,
            })
        }
    };
    let included: Vec<MethodId> = truncation.methods.iter().map(|m| m.id.clone()).collect();
    let report = report_from_fields(
        &prompt.report.id,
        provenance,
        &fields,
        evidence.unwrap_or(&included),
        fallback,
    );
    Ok(Written {
        report,
        completions,
        truncation,
    })
}

/// Single completion over the report, its trace and the bodies of the frame
/// methods that fit the window.
pub fn enhance_direct(
    report: &CrashReport,
    trace: &StackTrace,
    store: &GraphStore,
    client: &LlmClient,
    transcript: &mut Transcript,
    settings: &EnhanceSettings,
) -> Result<EnhanceOutcome, EnhanceError> {
    let start = transcript.position();
    let selection = select_frame_methods(trace, store);
    let prompt = ReportPrompt {
        report,
        trace,
        history: None,
        candidates: None,
    };
    let fallback = fallback_location(&selection, trace);
    let w = write_report(
        &prompt,
        &selection.methods,
        Provenance::Direct,
        None,
        &fallback,
        client,
        transcript,
        settings,
        true,
    )?;
    Ok(EnhanceOutcome {
        report: w.report,
        completions: w.completions,
        usage: usage_since(transcript, start),
        unmapped_frames: selection.unmapped,
        dropped_methods: w.truncation.dropped,
        body_truncated: w.truncation.body_truncated,
        agent: None,
    })
}
