use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};

use super::tokens::{ByteEstimator, TokenEstimator};
use super::{ChatParams, Message, Usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportErrorKind {
    /// Timeouts, 429 and 5xx.
    Retryable,
    /// Missing or rejected credential.
    Auth,
    Fatal,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{message}")]
pub struct TransportError {
    pub kind: TransportErrorKind,
    pub message: String,
}

impl TransportError {
    pub fn new(kind: TransportErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

pub trait Transport: Send + Sync {
    fn send(&self, messages: &[Message], params: &ChatParams) -> Result<Completion, TransportError>;
}

/// An OpenAI-style `/chat/completions` endpoint. The API key is read from
/// the named environment variable on every request and never stored.
#[derive(Debug)]
pub struct HttpTransport {
    base_url: String,
    key_env: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(base_url: &str, key_env: &str, timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::new(TransportErrorKind::Fatal, e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            key_env: key_env.to_string(),
            client,
        })
    }

    /// Fails when the credential variable is unset or empty.
    pub fn check_credential(&self) -> Result<(), TransportError> {
        match std::env::var(&self.key_env) {
            Ok(v) if !v.trim().is_empty() => Ok(()),
            _ => Err(TransportError::new(
                TransportErrorKind::Auth,
                format!("environment variable {} is not set", self.key_env),
            )),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, messages: &[Message], params: &ChatParams) -> Result<Completion, TransportError> {
        self.check_credential()?;
        let key = std::env::var(&self.key_env).unwrap_or_default();
        let body = json!({
            "model": params.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(key.trim())
            .json(&body)
            .send()
            .map_err(|e| {
                let kind = if e.is_timeout() || e.is_connect() {
                    TransportErrorKind::Retryable
                } else {
                    TransportErrorKind::Fatal
                };
                TransportError::new(kind, e.without_url().to_string())
            })?;
        let status = resp.status();
        if !status.is_success() {
            let kind = match status.as_u16() {
                401 | 403 => TransportErrorKind::Auth,
                408 | 409 | 429 | 500..=599 => TransportErrorKind::Retryable,
                _ => TransportErrorKind::Fatal,
            };
            return Err(TransportError::new(kind, format!("endpoint returned HTTP {status}")));
        }
        let v: Value = resp
            .json()
            .map_err(|e| TransportError::new(TransportErrorKind::Retryable, format!("unreadable response: {}", e.without_url())))?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| TransportError::new(TransportErrorKind::Fatal, "response has no choices[0].message.content"))?
            .to_string();
        let usage = Usage {
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        };
        Ok(Completion { text, usage })
    }
}

/// Fails every request; proves that replay runs stay offline.
#[derive(Debug, Default)]
pub struct ProhibitedTransport {
    calls: AtomicUsize,
}

impl ProhibitedTransport {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for ProhibitedTransport {
    fn send(&self, _: &[Message], _: &ChatParams) -> Result<Completion, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::new(TransportErrorKind::Fatal, "network access is prohibited in this run"))
    }
}

/// Answers from a fixed queue of replies. Usage is estimated from byte
/// lengths, so recorded costs stay realistic.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<Result<String, TransportError>>>,
}

impl ScriptedTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(|s| Ok(s.into())).collect()),
        }
    }

    pub fn push_error(&self, err: TransportError) {
        self.replies.lock().unwrap().push_back(Err(err));
    }

    pub fn push_reply(&self, reply: impl Into<String>) {
        self.replies.lock().unwrap().push_back(Ok(reply.into()));
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }
}

impl Transport for ScriptedTransport {
    fn send(&self, messages: &[Message], _: &ChatParams) -> Result<Completion, TransportError> {
        let next = self.replies.lock().unwrap().pop_front().unwrap_or_else(|| {
            Err(TransportError::new(TransportErrorKind::Fatal, "scripted transport ran out of replies"))
        })?;
        let est = ByteEstimator;
        let prompt_tokens = messages.iter().map(|m| est.estimate(&m.content) as u64).sum();
        Ok(Completion {
            usage: Usage {
                prompt_tokens,
                completion_tokens: est.estimate(&next) as u64,
            },
            text: next,
        })
    }
}
