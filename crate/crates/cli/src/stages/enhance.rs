use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use crashctx_core::enhance::{enhance_agentic, enhance_direct, EnhanceOutcome};
use crashctx_core::ingest::{extract_stack_traces, CrashReport};
use crashctx_core::llm::{HttpTransport, LlmClient, ProhibitedTransport, RateLimiter, Transcript, Transport, Usage};
use crashctx_core::store::GraphStore;

use super::index::{IndexRecord, INDEX_DIR};
use super::{retained, select};
use crate::config::{RunConfig, TranscriptMode};
use crate::layout::{read_json, write_json, write_text, Entry, Ledger, RunDir, StageLedger};
use crate::{Failure, Hooks, Mode, StageResult, TransportFactory};

pub fn enhanced_dir(mode: Mode) -> String {
    format!("enhanced/{mode}")
}

pub fn transcript_dir(mode: Mode) -> String {
    format!("transcripts/{mode}")
}

pub const AGENT_DIR: &str = "agent";

pub fn stage_name(mode: Mode) -> String {
    format!("enhance-{mode}")
}

enum Done {
    Ok(Entry),
    Systemic(String),
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    run: &'a RunDir,
    mode: Mode,
    transport: Option<TransportFactory>,
    limiter: Arc<RateLimiter>,
    stores: Mutex<HashMap<PathBuf, Arc<GraphStore>>>,
}

pub fn run(cfg: &RunConfig, run: &RunDir, mode: Mode, only: &[String], hooks: &Hooks) -> StageResult {
    let reports = select(retained(run)?, only)?;
    let transport = match cfg.transcripts.mode {
        TranscriptMode::Replay => None,
        TranscriptMode::Record => Some(match &hooks.transport {
            Some(f) => f.clone(),
            None => http_factory(cfg)?,
        }),
    };
    let out_dirs = [enhanced_dir(mode), transcript_dir(mode)];
    for d in out_dirs.iter().map(String::as_str).chain((mode == Mode::Agentic).then_some(AGENT_DIR)) {
        if only.is_empty() {
            run.fresh_dir(d).map_err(Failure::environment)?;
        }
    }

    let ctx = Ctx {
        cfg,
        run,
        mode,
        transport,
        limiter: Arc::new(RateLimiter::new(cfg.parallelism)),
        stores: Mutex::new(HashMap::new()),
    };
    let results: Vec<(String, Done)> = reports.par_iter().map(|(id, r)| (id.clone(), ctx.one(r))).collect();

    let stage = stage_name(mode);
    let mut entries = if only.is_empty() {
        BTreeMap::new()
    } else {
        Ledger::entries(run, &stage).map_err(Failure::environment)?
    };
    let mut systemic = None;
    for (id, done) in results {
        let entry = match done {
            Done::Ok(e) => e,
            Done::Systemic(why) => {
                systemic.get_or_insert_with(|| why.clone());
                Entry::failed(why)
            }
        };
        entries.insert(id, entry);
    }
    let mut section = StageLedger::new(entries);
    let mut usage = Usage::default();
    let mut cost = 0.0;
    for e in section.reports.values() {
        usage.prompt_tokens += e.detail.get("prompt_tokens").and_then(|v| v.as_u64()).unwrap_or(0);
        usage.completion_tokens += e.detail.get("completion_tokens").and_then(|v| v.as_u64()).unwrap_or(0);
        cost += e.detail.get("cost_usd").and_then(|v| v.as_f64()).unwrap_or(0.0);
    }
    section.totals.insert("prompt_tokens".into(), json!(usage.prompt_tokens));
    section.totals.insert("completion_tokens".into(), json!(usage.completion_tokens));
    section.totals.insert("cost_usd".into(), json!(round_cost(cost)));
    section.totals.insert("prices".into(), json!(cfg.model.prices));
    Ledger::update(run, &stage, section).map_err(Failure::environment)?;
    match systemic {
        Some(why) => Err(Failure::systemic(anyhow!("{mode} enhancement stopped: {why}"))),
        None => Ok(()),
    }
}

/// Dollar amounts are kept to a nanodollar so the ledger is stable text.
fn round_cost(c: f64) -> f64 {
    (c * 1e9).round() / 1e9
}

fn http_factory(cfg: &RunConfig) -> StageResult<TransportFactory> {
    let http = HttpTransport::new(&cfg.model.base_url, &cfg.model.api_key_env, cfg.timeout())
        .map_err(|e| Failure::environment(anyhow!("{e}")))?;
    http.check_credential().map_err(|e| Failure::systemic(anyhow!("{e}")))?;
    let http: Arc<dyn Transport> = Arc::new(http);
    Ok(Arc::new(move |_, _| http.clone()))
}

impl Ctx<'_> {
    fn one(&self, r: &CrashReport) -> Done {
        match self.enhance(r) {
            Ok(entry) => Done::Ok(entry),
            Err(e) => match e.downcast_ref::<crashctx_core::enhance::EnhanceError>() {
                Some(ee) if ee.is_systemic() => Done::Systemic(format!("{e:#}")),
                _ => {
                    log::warn!("{}: {e:#}", r.id);
                    Done::Ok(Entry::failed(format!("{e:#}")))
                }
            },
        }
    }

    fn store(&self, rel: &str) -> Result<Arc<GraphStore>> {
        let dir = self.cfg.output_dir.join(rel);
        let mut cache = self.stores.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(s) = cache.get(&dir) {
            return Ok(s.clone());
        }
        let s = Arc::new(GraphStore::load(&dir).with_context(|| format!("loading {rel}"))?);
        cache.insert(dir, s.clone());
        Ok(s)
    }

    fn enhance(&self, r: &CrashReport) -> Result<Entry> {
        let index_path = self.run.path(&format!("{INDEX_DIR}/{}.json", r.id));
        if !index_path.is_file() {
            return Ok(Entry::skipped("not indexed"));
        }
        let rec: IndexRecord = read_json(&index_path)?;
        let Some(trace) = extract_stack_traces(&r.description).into_iter().next() else {
            return Ok(Entry::skipped("no stack trace in the description"));
        };
        let store = self.store(&rec.store)?;
        let source = self.cfg.transcripts.dir.join(self.mode.name()).join(format!("{}.jsonl", r.id));
        let (client, mut transcript) = match &self.transport {
            None => {
                let t = Transcript::replay_from(&source).context("no recorded transcript")?;
                (LlmClient::new(Arc::new(ProhibitedTransport::default())), t)
            }
            Some(factory) => (
                LlmClient::new(factory(self.mode, &r.id)).with_limiter(self.limiter.clone()),
                Transcript::record_to(&source)?,
            ),
        };
        let settings = self.cfg.enhance_settings();
        let outcome = match self.mode {
            Mode::Direct => enhance_direct(r, &trace, &store, &client, &mut transcript, &settings)?,
            Mode::Agentic => enhance_agentic(r, &trace, &store, &client, &mut transcript, &settings, &self.cfg.agent)?,
        };
        if transcript.position() < transcript.exchanges().len() {
            log::warn!(
                "{}: {} recorded exchange(s) were not used",
                r.id,
                transcript.exchanges().len() - transcript.position()
            );
        }
        self.write(r, &outcome, &transcript)
    }

    fn write(&self, r: &CrashReport, o: &EnhanceOutcome, transcript: &Transcript) -> Result<Entry> {
        let path = |dir: &str, ext: &str| self.run.path(&format!("{dir}/{}.{ext}", r.id));
        write_text(&path(&enhanced_dir(self.mode), "json"), &o.report.to_document())?;
        write_text(&path(&transcript_dir(self.mode), "jsonl"), &transcript.to_jsonl())?;
        let cost = round_cost(self.cfg.model.prices.cost(o.usage));
        let mut entry = Entry::processed()
            .with("completions", o.completions)
            .with("prompt_tokens", o.usage.prompt_tokens)
            .with("completion_tokens", o.usage.completion_tokens)
            .with("cost_usd", cost)
            .with("unmapped_frames", o.unmapped_frames)
            .with("dropped_methods", o.dropped_methods)
            .with("body_truncated", o.body_truncated);
        if let Some(agent) = &o.agent {
            write_json(&path(AGENT_DIR, "json"), agent)?;
            entry = entry
                .with("steps", agent.steps)
                .with("termination", agent.termination)
                .with("analyzed", agent.analyzed.len());
        }
        log::info!("{}: {} report written ({} completion(s), ${cost:.6})", r.id, self.mode, o.completions);
        Ok(entry)
    }
}

/// Where the enhanced document of `id` lives, if it was produced.
pub fn enhanced_path(run: &RunDir, mode: Mode, id: &str) -> Option<PathBuf> {
    let p = run.path(&format!("{}/{id}.json", enhanced_dir(mode)));
    p.is_file().then_some(p)
}

pub fn has_outputs(run: &RunDir, mode: Mode) -> bool {
    let dir = run.path(&enhanced_dir(mode));
    dir_has_json(&dir)
}

fn dir_has_json(dir: &Path) -> bool {
    std::fs::read_dir(dir).is_ok_and(|mut it| {
        it.any(|e| e.is_ok_and(|e| e.path().extension().is_some_and(|x| x == "json")))
    })
}
