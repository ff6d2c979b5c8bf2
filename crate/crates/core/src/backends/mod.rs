//! Chat-completion, embedding, and judge backends.
//!
//! Every architecture talks to models through these traits. Live backends
//! speak the common OpenAI-style wire format over HTTP (with optional
//! record/replay fixtures); scripted backends are pure functions of their
//! input so benchmark runs are reproducible offline.

mod fixtures;
mod http;
mod judge;
mod scripted;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::AssembledContext;

pub use fixtures::{fixture_key, FixtureMode, FixtureTransport};
pub use http::{HttpChat, HttpEmbedding, HttpTransport, RetryPolicy, Transport};
pub use judge::{judge_score, Judge, LlmJudge, ScriptedJudge};
pub use scripted::{
    echo_answer, parse_probe_keys, probe_tag, HashEmbedder, LatencyModel, ScriptedBehavior,
    ScriptedChat, UNKNOWN_ANSWER,
};

/// Context limit of the reference inference model.
pub const DEFAULT_HARD_LIMIT: u64 = 128_000;
pub const DEFAULT_INFERENCE_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("context overflow: {input_tokens} input tokens exceed the {limit}-token limit")]
    Overflow { input_tokens: u64, limit: u64 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not parse backend response: {0}")]
    Parse(String),
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("no recorded fixture for request {0}")]
    FixtureMissing(String),
    #[error("fixture io error: {0}")]
    FixtureIo(String),
}

impl BackendError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallOutcome {
    Ok,
    Overflow,
    Error,
}

/// Accounting for one model call. Produced on every path, failures included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: f64,
    /// True when latency comes from the scripted latency model.
    pub simulated: bool,
    pub outcome: CallOutcome,
}

impl CallRecord {
    pub fn overflow(input_tokens: u64) -> Self {
        Self {
            input_tokens,
            output_tokens: 0,
            latency_ms: 0.0,
            simulated: true,
            outcome: CallOutcome::Overflow,
        }
    }
}

/// A chat request: a system turn and a user turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub input_tokens: u64,
    pub temperature: f64,
    pub max_output_tokens: u64,
}

impl ChatRequest {
    pub fn from_context(ctx: &AssembledContext, temperature: f64, max_output_tokens: u64) -> Self {
        Self {
            system: ctx.system_preamble.clone(),
            user: ctx.render_body(),
            input_tokens: ctx.total_tokens,
            temperature,
            max_output_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub result: Result<String, BackendError>,
    pub record: CallRecord,
}

impl Completion {
    pub fn text(&self) -> Option<&str> {
        self.result.as_deref().ok()
    }
}

pub trait ChatBackend: Send + Sync {
    fn model(&self) -> &str;

    /// Maximum input tokens the model accepts.
    fn hard_limit(&self) -> u64;

    /// Whether reported latencies are simulated.
    fn simulated(&self) -> bool;

    /// Sends a request that is known to fit the context limit.
    fn send(&self, request: &ChatRequest) -> Completion;

    /// Sends a request, reporting an overflow outcome instead of calling the
    /// model when the input exceeds [`ChatBackend::hard_limit`].
    fn complete(&self, request: &ChatRequest) -> Completion {
        let limit = self.hard_limit();
        if request.input_tokens > limit {
            return Completion {
                result: Err(BackendError::Overflow {
                    input_tokens: request.input_tokens,
                    limit,
                }),
                record: CallRecord::overflow(request.input_tokens),
            };
        }
        self.send(request)
    }
}

/// Runs one inference call over an assembled context.
pub fn chat_complete(
    backend: &dyn ChatBackend,
    context: &AssembledContext,
    temperature: f64,
    max_output_tokens: u64,
) -> Completion {
    backend.complete(&ChatRequest::from_context(context, temperature, max_output_tokens))
}

pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError>;
}

/// Transport-layer embedding call; see [`crate::vector::embed`] for the
/// validated entry point.
pub fn embed_text(backend: &dyn EmbeddingBackend, text: &str) -> Result<Vec<f64>, BackendError> {
    backend.embed(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpOpenaiCompatible,
    Scripted,
}

/// Serializable description of a chat backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatBackendSpec {
    pub kind: BackendKind,
    pub model: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    pub temperature: f64,
    pub max_output_tokens: u64,
    pub timeout_ms: u64,
    pub hard_limit: u64,
    #[serde(default)]
    pub scripted: Option<ScriptedBehavior>,
    #[serde(default)]
    pub fixtures: FixtureMode,
    #[serde(default)]
    pub latency: LatencyModel,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

impl ChatBackendSpec {
    pub fn scripted(behavior: ScriptedBehavior) -> Self {
        Self {
            kind: BackendKind::Scripted,
            model: "scripted".to_string(),
            endpoint: None,
            api_key_env: default_key_env(),
            temperature: DEFAULT_INFERENCE_TEMPERATURE,
            max_output_tokens: 512,
            timeout_ms: 60_000,
            hard_limit: DEFAULT_HARD_LIMIT,
            scripted: Some(behavior),
            fixtures: FixtureMode::Off,
            latency: LatencyModel::default(),
        }
    }

    pub fn http(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::HttpOpenaiCompatible,
            model: model.into(),
            endpoint: Some(endpoint.into()),
            scripted: None,
            ..Self::scripted(ScriptedBehavior::EchoFactIfPresent)
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(0.0..=2.0).contains(&self.temperature) || self.temperature.is_nan() {
            return Err(BackendError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        match self.kind {
            BackendKind::Scripted if self.scripted.is_none() => Err(BackendError::Config(
                "scripted backend needs a behavior".to_string(),
            )),
            BackendKind::HttpOpenaiCompatible if self.endpoint.is_none() => Err(
                BackendError::Config("http backend needs an endpoint".to_string()),
            ),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn ChatBackend>, BackendError> {
        self.validate()?;
        match self.kind {
            BackendKind::Scripted => Ok(Arc::new(ScriptedChat::new(
                self.model.clone(),
                self.scripted.clone().expect("validated"),
                self.latency,
                self.hard_limit,
            ))),
            BackendKind::HttpOpenaiCompatible => {
                let transport = self.transport()?;
                Ok(Arc::new(HttpChat::new(
                    self.endpoint.clone().expect("validated"),
                    self.model.clone(),
                    self.hard_limit,
                    bearer_from_env(&self.api_key_env),
                    transport,
                )))
            }
        }
    }

    fn transport(&self) -> Result<Arc<dyn Transport>, BackendError> {
        let live: Arc<dyn Transport> = Arc::new(HttpTransport::new(
            Duration::from_millis(self.timeout_ms),
            RetryPolicy::default(),
        ));
        FixtureTransport::wrap(self.fixtures.clone(), live)
    }
}

/// Serializable description of an embedding backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingBackendSpec {
    pub kind: BackendKind,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub fixtures: FixtureMode,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    60_000
}

impl EmbeddingBackendSpec {
    pub fn scripted(dim: usize, seed: u64) -> Self {
        Self {
            kind: BackendKind::Scripted,
            dim,
            seed,
            model: "hash-embedding".to_string(),
            endpoint: None,
            api_key_env: default_key_env(),
            fixtures: FixtureMode::Off,
            timeout_ms: default_timeout(),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn EmbeddingBackend>, BackendError> {
        if self.dim == 0 {
            return Err(BackendError::Config("embedding dimension must be positive".into()));
        }
        match self.kind {
            BackendKind::Scripted => Ok(Arc::new(HashEmbedder::new(self.dim, self.seed))),
            BackendKind::HttpOpenaiCompatible => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| BackendError::Config("http backend needs an endpoint".into()))?;
                let live: Arc<dyn Transport> = Arc::new(HttpTransport::new(
                    Duration::from_millis(self.timeout_ms),
                    RetryPolicy::default(),
                ));
                let transport = FixtureTransport::wrap(self.fixtures.clone(), live)?;
                Ok(Arc::new(HttpEmbedding::new(
                    endpoint,
                    self.model.clone(),
                    self.dim,
                    bearer_from_env(&self.api_key_env),
                    transport,
                )))
            }
        }
    }
}

fn bearer_from_env(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|v| !v.is_empty())
}
