use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crashctx_core::enhance::{EnhancedReport, UNKNOWN};
use crashctx_core::eval::{
    audit_fields, best_fix_score, bm25_rank, completeness, match_localization, summarize, AuditInput, Completeness,
    FieldPresence, PipelineEval, ReportEval, NOT_COMPUTED,
};
use crashctx_core::ingest::CrashReport;
use crashctx_core::repo::GroundTruth;
use crashctx_core::store::GraphStore;

use super::enhance::{enhanced_path, has_outputs};
use super::index::{IndexRecord, INDEX_DIR, TRUTH_DIR};
use super::retained;
use crate::config::RunConfig;
use crate::layout::{read_json, write_json, write_text, Entry, Ledger, RunDir, StageLedger};
use crate::{Failure, Mode, StageResult};

pub const EVAL_DIR: &str = "eval";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub report_id: String,
    pub source: String,
    pub fields: FieldPresence,
    pub completeness: Completeness,
}

pub fn run(cfg: &RunConfig, run: &RunDir) -> StageResult {
    let reports = retained(run)?;
    let out = run.fresh_dir(EVAL_DIR).map_err(Failure::environment)?;
    let computed: BTreeMap<Mode, bool> = Mode::ALL.iter().map(|&m| (m, has_outputs(run, m))).collect();

    let mut records = Vec::new();
    let mut audit = Vec::new();
    let mut entries = BTreeMap::new();
    for (id, r) in &reports {
        let entry = match evaluate(cfg, run, r, &computed) {
            Ok(Some((rec, rows))) => {
                let e = Entry::processed().with("bm25_rank", rec.bm25_rank);
                records.push(rec);
                audit.extend(rows);
                e
            }
            Ok(None) => Entry::skipped("no ground truth"),
            Err(e) => {
                log::warn!("{id}: {e:#}");
                Entry::failed(format!("{e:#}"))
            }
        };
        entries.insert(id.clone(), entry);
    }

    let summary = summarize(&records, &cfg.eval.top_n);
    let write = || -> Result<()> {
        write_json(&out.join("records.json"), &records)?;
        write_json(&out.join("summary.json"), &summary)?;
        write_text(&out.join("localization.csv"), &summary.localization_csv())?;
        write_text(&out.join("codebleu.csv"), &summary.codebleu_csv())?;
        write_text(&out.join("audit.csv"), &audit_csv(&audit))?;
        write_text(&out.join("summary.md"), &markdown(&summary.to_markdown(), records.len(), &computed))?;
        Ok(())
    };
    write().map_err(Failure::environment)?;
    Ledger::update(run, "eval", StageLedger::new(entries)).map_err(Failure::environment)?;
    Ok(())
}

fn markdown(tables: &str, evaluated: usize, computed: &BTreeMap<Mode, bool>) -> String {
    let mut s = String::from("# Evaluation\n\n");
    let _ = writeln!(s, "Reports with ground truth: {evaluated}.");
    for (m, ok) in computed {
        if !ok {
            let _ = writeln!(s, "{m} pipeline: {NOT_COMPUTED} (no enhanced reports in this run).");
        }
    }
    s.push('\n');
    s.push_str(tables);
    s
}

type Evaluated = (ReportEval, Vec<AuditRow>);

fn evaluate(cfg: &RunConfig, run: &RunDir, r: &CrashReport, computed: &BTreeMap<Mode, bool>) -> Result<Option<Evaluated>> {
    let truth_path = run.path(&format!("{TRUTH_DIR}/{}.json", r.id));
    let mut rows = vec![audit_row(&r.id, "raw", AuditInput::Raw(r))];
    if !truth_path.is_file() {
        return Ok(None);
    }
    let truth: GroundTruth = read_json(&truth_path)?;
    let rec: IndexRecord = read_json(&run.path(&format!("{INDEX_DIR}/{}.json", r.id)))?;
    let store = GraphStore::load(&cfg.output_dir.join(&rec.store)).with_context(|| format!("loading {}", rec.store))?;
    let ranked = bm25_rank(&r.id, &r.full_text(), store.graph().nodes.values(), cfg.bm25())?;

    let fixed: Vec<_> = truth.post_fix_bodies.iter().map(|b| (b.id.clone(), b.body.clone())).collect();
    let mut pipeline = |mode: Mode| -> Result<Option<PipelineEval>> {
        if !computed[&mode] {
            return Ok(None);
        }
        let Some(path) = enhanced_path(run, mode, &r.id) else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(&path)?;
        let doc = EnhancedReport::from_document(&text).with_context(|| path.display().to_string())?;
        rows.push(audit_row(&r.id, mode.name(), AuditInput::Enhanced(&doc)));
        let localization = match_localization(&r.id, &doc.problem_location, &truth.modified_methods);
        let hypothesis = if doc.possible_fix == UNKNOWN { "" } else { doc.possible_fix.as_str() };
        let fix = localization
            .matched
            .then(|| best_fix_score(hypothesis, &fixed, cfg.eval.weights))
            .flatten();
        Ok(Some(PipelineEval { localization, fix }))
    };
    let direct = pipeline(Mode::Direct)?;
    let agentic = pipeline(Mode::Agentic)?;
    Ok(Some((
        ReportEval {
            system: r.system().to_string(),
            report_id: r.id.clone(),
            bm25_rank: ranked.first_hit(&truth.modified_methods),
            direct,
            agentic,
        },
        rows,
    )))
}

fn audit_row(id: &str, source: &str, input: AuditInput<'_>) -> AuditRow {
    AuditRow {
        report_id: id.to_string(),
        source: source.to_string(),
        fields: audit_fields(input),
        completeness: completeness(input),
    }
}

fn audit_csv(rows: &[AuditRow]) -> String {
    let mut s = String::from("report_id,source,steps,root_cause,component,fix,location_level,root_cause_stated,repair_level\n");
    let b = |x: bool| u8::from(x);
    for r in rows {
        let f = r.fields;
        let c = r.completeness;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.report_id,
            r.source,
            b(f.steps),
            b(f.root_cause),
            b(f.component),
            b(f.fix),
            serde_json::to_value(c.location).unwrap().as_str().unwrap_or(""),
            b(c.root_cause),
            serde_json::to_value(c.repair).unwrap().as_str().unwrap_or(""),
        );
    }
    s
}
