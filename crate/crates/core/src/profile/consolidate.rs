//! Consolidators and the retrying consolidation step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::{build_consolidation_prompt, ConsolidationRequest, PromptError};
use super::SemanticProfile;
use crate::backends::{BackendError, CallOutcome, CallRecord, ChatBackend, ChatRequest};
use crate::facts::{parse_markers, render_marker};
use crate::tokens::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictRule {
    #[default]
    TemporalPrecedence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationPolicy {
    /// Agent turns between consolidations.
    pub cadence: u64,
    pub consolidator_temperature: f64,
    pub conflict_rule: ConflictRule,
    pub max_retries: u32,
}

impl Default for ConsolidationPolicy {
    fn default() -> Self {
        Self {
            cadence: 1,
            consolidator_temperature: 0.0,
            conflict_rule: ConflictRule::TemporalPrecedence,
            max_retries: 2,
        }
    }
}

impl ConsolidationPolicy {
    pub fn with_cadence(cadence: u64) -> Self {
        Self {
            cadence: cadence.max(1),
            ..Self::default()
        }
    }
}

/// Whether the turn at `message_index` triggers a consolidation. Agent turns
/// sit at odd indices; the `n`-th agent turn (1-based) fires when `n` is a
/// multiple of the cadence.
pub fn should_consolidate(message_index: u64, policy: &ConsolidationPolicy) -> bool {
    if message_index % 2 == 0 {
        return false;
    }
    let ordinal = message_index.div_ceil(2);
    ordinal % policy.cadence.max(1) == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsolidationError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("consolidator returned an empty profile")]
    EmptyResponse,
}

/// One attempt at producing the next profile text.
pub trait Consolidator: Send + Sync {
    /// Model name used for pricing the consolidation call.
    fn model(&self) -> &str;

    fn attempt(
        &self,
        req: &ConsolidationRequest,
        policy: &ConsolidationPolicy,
    ) -> (Result<String, ConsolidationError>, CallRecord);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationOutcome {
    pub profile: SemanticProfile,
    pub calls: Vec<CallRecord>,
    pub error: Option<ConsolidationError>,
}

impl ConsolidationOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Runs a consolidator with up to `policy.max_retries` retries. On success
/// the returned profile is the prior's successor; otherwise the prior is
/// returned unchanged and the last error is reported.
pub fn consolidate(
    req: &ConsolidationRequest,
    consolidator: &dyn Consolidator,
    policy: &ConsolidationPolicy,
    counter: &TokenCounter,
) -> ConsolidationOutcome {
    if let Err(e) = req.validate() {
        return ConsolidationOutcome {
            profile: req.prior_profile.clone(),
            calls: Vec::new(),
            error: Some(e.into()),
        };
    }
    let mut calls = Vec::new();
    let mut last_err = None;
    for attempt in 0..=policy.max_retries {
        let (result, record) = consolidator.attempt(req, policy);
        calls.push(record);
        match result {
            Ok(text) => {
                return ConsolidationOutcome {
                    profile: req.prior_profile.successor(text, req.through_index(), counter),
                    calls,
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("consolidation attempt {} failed: {e}", attempt + 1);
                last_err = Some(e);
            }
        }
    }
    ConsolidationOutcome {
        profile: req.prior_profile.clone(),
        calls,
        error: last_err,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleMode {
    /// Keeps every fact, latest value wins.
    Exact,
    /// Deterministically forgets roughly half of the keys.
    DropHalf,
}

/// Deterministic key-value merger over `FACT` markers.
///
/// The profile is one `FACT key=value;` line per key in order of first
/// assertion. Messages newer than the prior profile's coverage are applied in
/// index order, each assertion overwriting the stored value.
#[derive(Debug, Clone)]
pub struct RuleConsolidator {
    mode: RuleMode,
    model: String,
    counter: TokenCounter,
}

impl RuleConsolidator {
    pub fn new(mode: RuleMode) -> Self {
        Self {
            mode,
            model: "rule-consolidator".into(),
            counter: TokenCounter::default(),
        }
    }

    /// Prices the rule consolidator's calls as if they went to `model`.
    pub fn priced_as(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    fn keeps(&self, key: &str) -> bool {
        match self.mode {
            RuleMode::Exact => true,
            RuleMode::DropHalf => Sha256::digest(key.as_bytes())[0] % 2 == 0,
        }
    }

    pub fn merge(&self, req: &ConsolidationRequest) -> String {
        let mut facts: Vec<(String, String)> = parse_markers(&req.prior_profile.text)
            .into_iter()
            .map(|m| (m.key, m.value))
            .collect();
        let covered = req.prior_profile.last_consolidated_index;
        for msg in req.messages_in_scope() {
            if covered.is_some_and(|c| msg.index <= c) {
                continue;
            }
            for m in parse_markers(&msg.text) {
                if !self.keeps(&m.key) {
                    continue;
                }
                match facts.iter_mut().find(|(k, _)| *k == m.key) {
                    Some(slot) => slot.1 = m.value,
                    None => facts.push((m.key, m.value)),
                }
            }
        }
        facts
            .iter()
            .map(|(k, v)| render_marker(k, v))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Consolidator for RuleConsolidator {
    fn model(&self) -> &str {
        &self.model
    }

    fn attempt(
        &self,
        req: &ConsolidationRequest,
        _policy: &ConsolidationPolicy,
    ) -> (Result<String, ConsolidationError>, CallRecord) {
        // Accounted as the equivalent model call: the prompt in, the
        // rewritten profile out.
        let input_tokens = build_consolidation_prompt(req)
            .map(|p| self.counter.count(&p) as u64)
            .unwrap_or(0);
        let text = self.merge(req);
        let record = CallRecord {
            input_tokens,
            output_tokens: self.counter.count(&text) as u64,
            latency_ms: 0.0,
            simulated: true,
            outcome: CallOutcome::Ok,
        };
        (Ok(text), record)
    }
}

/// Sends the consolidation prompt to a chat model and takes its reply as the
/// new profile.
pub struct LlmConsolidator {
    backend: Arc<dyn ChatBackend>,
    max_output_tokens: u64,
    counter: TokenCounter,
}

impl LlmConsolidator {
    pub fn new(backend: Arc<dyn ChatBackend>, max_output_tokens: u64) -> Self {
        Self {
            backend,
            max_output_tokens,
            counter: TokenCounter::default(),
        }
    }
}

impl Consolidator for LlmConsolidator {
    fn model(&self) -> &str {
        self.backend.model()
    }

    fn attempt(
        &self,
        req: &ConsolidationRequest,
        policy: &ConsolidationPolicy,
    ) -> (Result<String, ConsolidationError>, CallRecord) {
        let prompt = match build_consolidation_prompt(req) {
            Ok(p) => p,
            Err(e) => {
                let record = CallRecord {
                    input_tokens: 0,
                    output_tokens: 0,
                    latency_ms: 0.0,
                    simulated: self.backend.simulated(),
                    outcome: CallOutcome::Error,
                };
                return (Err(e.into()), record);
            }
        };
        let request = ChatRequest {
            system: String::new(),
            input_tokens: self.counter.count(&prompt) as u64,
            user: prompt,
            temperature: policy.consolidator_temperature,
            max_output_tokens: self.max_output_tokens,
        };
        let out = self.backend.complete(&request);
        let result = match out.result {
            Ok(text) if text.trim().is_empty() => Err(ConsolidationError::EmptyResponse),
            Ok(text) => Ok(text.trim().to_string()),
            Err(e) => Err(e.into()),
        };
        (result, out.record)
    }
}
