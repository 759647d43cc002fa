use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChatExchange, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptMode {
    Record,
    Replay,
}

/// Ordered exchanges of one report. Stored as JSON Lines, one exchange each.
#[derive(Debug)]
pub struct Transcript {
    mode: TranscriptMode,
    exchanges: Vec<ChatExchange>,
    cursor: usize,
    sink: Option<PathBuf>,
}

fn terr(path: &Path, e: impl std::fmt::Display) -> LlmError {
    LlmError::Transcript {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl Transcript {
    /// In-memory recording.
    pub fn record() -> Self {
        Self {
            mode: TranscriptMode::Record,
            exchanges: Vec::new(),
            cursor: 0,
            sink: None,
        }
    }

    /// Recording that also appends every exchange to `path`, replacing any
    /// earlier file.
    pub fn record_to(path: &Path) -> Result<Self, LlmError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| terr(path, e))?;
        }
        File::create(path).map_err(|e| terr(path, e))?;
        Ok(Self {
            sink: Some(path.to_path_buf()),
            ..Self::record()
        })
    }

    pub fn replay(exchanges: Vec<ChatExchange>) -> Self {
        Self {
            mode: TranscriptMode::Replay,
            exchanges,
            cursor: 0,
            sink: None,
        }
    }

    pub fn replay_from(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|e| terr(path, e))?;
        let mut exchanges = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| terr(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: ChatExchange =
                serde_json::from_str(&line).map_err(|e| terr(path, format!("line {}: {e}", n + 1)))?;
            exchanges.push(ex);
        }
        Ok(Self::replay(exchanges))
    }

    pub fn mode(&self) -> TranscriptMode {
        self.mode
    }

    pub fn exchanges(&self) -> &[ChatExchange] {
        &self.exchanges
    }

    /// Exchanges consumed so far in replay, or recorded so far.
    pub fn position(&self) -> usize {
        match self.mode {
            TranscriptMode::Record => self.exchanges.len(),
            TranscriptMode::Replay => self.cursor,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ex in &self.exchanges {
            out.push_str(&serde_json::to_string(ex).expect("exchange serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| terr(path, e))?;
        }
        std::fs::write(path, self.to_jsonl()).map_err(|e| terr(path, e))
    }

    pub(crate) fn next_replay(&mut self, digest: &str) -> Result<&ChatExchange, LlmError> {
        let index = self.cursor;
        match self.exchanges.get(index) {
            Some(ex) if ex.digest == digest => {
                self.cursor += 1;
                Ok(&self.exchanges[index])
            }
            Some(ex) => Err(LlmError::ReplayDivergence {
                index,
                expected: ex.digest.clone(),
                found: digest.to_string(),
            }),
            None => Err(LlmError::ReplayDivergence {
                index,
                expected: "<end of transcript>".into(),
                found: digest.to_string(),
            }),
        }
    }

    pub(crate) fn push(&mut self, ex: ChatExchange) -> Result<(), LlmError> {
        if let Some(path) = &self.sink {
            let mut f = OpenOptions::new().append(true).open(path).map_err(|e| terr(path, e))?;
            let line = serde_json::to_string(&ex).expect("exchange serializes");
            writeln!(f, "{line}").map_err(|e| terr(path, e))?;
        }
        self.exchanges.push(ex);
        Ok(())
    }
}
