use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{Context, Result};

use crashctx_core::enhance::{render_markdown, EnhancedReport};

use super::enhance::enhanced_path;
use super::retained;
use crate::layout::{write_text, Entry, Ledger, RunDir, StageLedger};
use crate::{Failure, Mode, StageResult};

pub const PAGES_DIR: &str = "pages";

pub fn run(run: &RunDir) -> StageResult {
    let reports = retained(run)?;
    let pages = run.fresh_dir(PAGES_DIR).map_err(Failure::environment)?;
    let mut index = String::from("# Enhanced reports\n\n| Report | Title | Direct | Agentic |\n|---|---|---|---|\n");
    let mut entries = BTreeMap::new();
    for (id, r) in &reports {
        let mut cells = Vec::new();
        let mut written = 0;
        let mut error = None;
        for mode in Mode::ALL {
            let Some(src) = enhanced_path(run, mode, id) else {
                cells.push("-".to_string());
                continue;
            };
            let page = (|| -> Result<()> {
                let text = std::fs::read_to_string(&src)?;
                let doc = EnhancedReport::from_document(&text).with_context(|| src.display().to_string())?;
                write_text(&pages.join(format!("{mode}/{id}.md")), &render_markdown(r, &doc))
            })();
            match page {
                Ok(()) => {
                    written += 1;
                    cells.push(format!("[{mode}]({mode}/{id}.md)"));
                }
                Err(e) => {
                    cells.push("error".to_string());
                    error = Some(format!("{e:#}"));
                }
            }
        }
        let _ = writeln!(index, "| {id} | {} | {} |", r.title.replace('|', "\\|"), cells.join(" | "));
        let entry = match (error, written) {
            (Some(e), _) => Entry::failed(e),
            (None, 0) => Entry::skipped("no enhanced report"),
            (None, n) => Entry::processed().with("pages", n),
        };
        entries.insert(id.clone(), entry);
    }
    write_text(&pages.join("index.md"), &index).map_err(Failure::environment)?;
    Ledger::update(run, "report", StageLedger::new(entries)).map_err(Failure::environment)?;
    Ok(())
}
