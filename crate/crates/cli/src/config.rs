//! The run configuration file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crashctx_core::enhance::{AgentBudget, EnhanceSettings};
use crashctx_core::eval::{Bm25Params, CodeBleuWeights};
use crashctx_core::llm::{ByteEstimator, ChatParams, Pricing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of `*.json` records or a JSONL file.
    pub corpus: PathBuf,
    /// Holds one clone per system, named by the lowercased project key.
    pub repos_root: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_branch")]
    pub branch: String,
    /// Directory names left out of indexing and ground truth.
    #[serde(default = "default_exclude")]
    pub exclude: Vec<String>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub agent: AgentBudget,
    #[serde(default)]
    pub eval: EvalConfig,
    pub transcripts: TranscriptConfig,
}

fn default_branch() -> String {
    "main".into()
}

fn default_exclude() -> Vec<String> {
    vec!["test".into(), "tests".into()]
}

fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub base_url: String,
    pub name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub context_tokens: usize,
    pub timeout_secs: u64,
    pub prices: Pricing,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let params = ChatParams::default();
        Self {
            base_url: "https://api.openai.com/v1".into(),
            name: params.model,
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: params.temperature,
            max_output_tokens: params.max_output_tokens,
            context_tokens: 128_000,
            timeout_secs: 120,
            prices: Pricing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k1: f64,
    pub b: f64,
    pub top_n: Vec<usize>,
    pub weights: CodeBleuWeights,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            k1: p.k1,
            b: p.b,
            top_n: vec![1, 3, 5],
            weights: CodeBleuWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptMode {
    Record,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptConfig {
    pub mode: TranscriptMode,
    /// Holds `direct/<id>.jsonl` and `agentic/<id>.jsonl`.
    pub dir: PathBuf,
}

impl RunConfig {
    /// Reads and validates a config file. Relative paths are taken from
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.corpus, &mut cfg.repos_root, &mut cfg.output_dir, &mut cfg.transcripts.dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(0.0..=2.0).contains(&m.temperature) {
            bail!("model.temperature must lie in [0, 2], got {}", m.temperature);
        }
        if m.max_output_tokens == 0 {
            bail!("model.max_output_tokens must be positive");
        }
        if m.context_tokens <= m.max_output_tokens as usize {
            bail!("model.context_tokens must exceed model.max_output_tokens");
        }
        if m.timeout_secs == 0 {
            bail!("model.timeout_secs must be positive");
        }
        if m.api_key_env.trim().is_empty() || m.api_key_env.contains(['=', ' ']) {
            bail!("model.api_key_env must name an environment variable");
        }
        if !(m.prices.input_per_million >= 0.0 && m.prices.output_per_million >= 0.0) {
            bail!("model.prices must not be negative");
        }
        if !(1..=256).contains(&self.parallelism) {
            bail!("parallelism must lie in [1, 256], got {}", self.parallelism);
        }
        self.agent.validate().map_err(|e| anyhow::anyhow!("agent: {e}"))?;
        let e = &self.eval;
        if e.k1.is_nan() || e.k1 <= 0.0 || !(0.0..=1.0).contains(&e.b) {
            bail!("eval.k1 must be positive and eval.b must lie in [0, 1]");
        }
        if e.top_n.is_empty() || e.top_n.contains(&0) {
            bail!("eval.top_n must list positive ranks");
        }
        let w = [e.weights.ngram, e.weights.weighted_ngram, e.weights.syntax, e.weights.dataflow];
        if w.iter().any(|x| x.is_nan() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            bail!("eval.weights must be non-negative with a positive sum");
        }
        Ok(())
    }

    pub fn chat_params(&self) -> ChatParams {
        ChatParams {
            model: self.model.name.clone(),
            temperature: self.model.temperature,
            max_output_tokens: self.model.max_output_tokens,
        }
    }

    pub fn enhance_settings(&self) -> EnhanceSettings {
        EnhanceSettings {
            params: self.chat_params(),
            context_tokens: self.model.context_tokens,
            estimator: std::sync::Arc::new(ByteEstimator),
        }
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.eval.k1,
            b: self.eval.b,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.model.timeout_secs)
    }

    pub fn repo_dir(&self, system: &str) -> PathBuf {
        self.repos_root.join(system.to_ascii_lowercase())
    }
}
