//! Chat-completion client with record/replay transcripts.

mod structured;
mod tokens;
mod transcript;
mod transport;

pub use structured::{parse_structured, StructuredError};
pub use tokens::{ByteEstimator, Pricing, TokenEstimator};
pub use transcript::{Transcript, TranscriptMode};
pub use transport::{
    Completion, HttpTransport, ProhibitedTransport, ScriptedTransport, Transport, TransportError,
    TransportErrorKind,
};

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for ChatParams {
    fn default() -> Self {
        Self {
            model: "gpt-4o-mini-2024-07-18".into(),
            temperature: 0.0,
            max_output_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub digest: String,
    pub params: ChatParams,
    pub request: Vec<Message>,
    pub response: String,
    pub usage: Usage,
}

/// SHA-256 of the canonical JSON encoding of messages and params.
pub fn request_digest(messages: &[Message], params: &ChatParams) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        messages: &'a [Message],
        model: &'a str,
        temperature: f64,
        max_output_tokens: u32,
    }
    let bytes = serde_json::to_vec(&Canonical {
        messages,
        model: &params.model,
        temperature: params.temperature,
        max_output_tokens: params.max_output_tokens,
    })
    .expect("messages serialize");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("completion failed after {attempts} attempt(s): {error}")]
    Transport {
        attempts: u32,
                error: TransportError,
    },
    #[error("replay diverged at exchange {index}: expected digest {expected}, request has {found}")]
    ReplayDivergence {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("transcript {path}: {message}")]
    Transcript { path: String, message: String },
}

impl LlmError {
    /// Errors that will recur for every report, such as a missing credential.
    pub fn is_systemic(&self) -> bool {
        matches!(
            self,
            LlmError::Transport { error, .. } if error.kind == TransportErrorKind::Auth
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `n` (0-based).
    pub fn delay(&self, n: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << n.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }

    /// Upper bound on the total time spent sleeping between attempts.
    pub fn max_total_delay(&self) -> Duration {
        (0..self.max_attempts.saturating_sub(1)).map(|n| self.delay(n)).sum()
    }
}

/// Caps the number of requests in flight across threads.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a RateLimiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

impl RateLimiter {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().unwrap()
    }
}

pub struct LlmClient {
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    limiter: Arc<RateLimiter>,
    sleep: fn(Duration),
}

impl LlmClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            retry: RetryPolicy::default(),
            limiter: Arc::new(RateLimiter::new(4)),
            sleep: std::thread::sleep,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_sleep(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    /// One completion. Replay transcripts answer from disk and never touch
    /// the transport; record transcripts append the exchange.
    pub fn complete(
        &self,
        messages: &[Message],
        params: &ChatParams,
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        let digest = request_digest(messages, params);
        if transcript.mode() == TranscriptMode::Replay {
            return transcript.next_replay(&digest).map(|ex| ex.response.clone());
        }
        let mut attempt = 0;
        let completion = loop {
            attempt += 1;
            let result = {
                let _permit = self.limiter.acquire();
                self.transport.send(messages, params)
            };
            match result {
                Ok(c) => break c,
                Err(e) if e.kind == TransportErrorKind::Retryable && attempt < self.retry.max_attempts => {
                    log::warn!("completion attempt {attempt} failed: {e}");
                    (self.sleep)(self.retry.delay(attempt - 1));
                }
                Err(source) => {
                    return Err(LlmError::Transport {
                        attempts: attempt,
                        error: source,
                    })
                }
            }
        };
        let exchange = ChatExchange {
            digest,
            params: params.clone(),
            request: messages.to_vec(),
            response: completion.text.clone(),
            usage: completion.usage,
        };
        transcript.push(exchange)?;
        Ok(completion.text)
    }
}
