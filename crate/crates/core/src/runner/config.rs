use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::backends::{BackendError, ChatBackendSpec, EmbeddingBackendSpec, ScriptedBehavior};
use crate::evaluation::{Architecture, CostAssumptions, PricingTable, CONSOLIDATION_MODEL, INFERENCE_MODEL};
use crate::full_context::DEFAULT_TRUNCATION_LIMIT;
use crate::persistence::provenance_hash;
use crate::profile::{Consolidator, ExecutionMode, LlmConsolidator, RuleConsolidator, RuleMode};
use crate::simulation::{ActMix, Placement, CAPACITY_SCALES, REALISTIC_SCALES};
use crate::vector::{DEFAULT_CHUNK_TOKENS, DEFAULT_OVERLAP_TOKENS, DEFAULT_TOP_K};

pub const DEFAULT_PREAMBLE: &str =
    "You are a research assistant on a computational biology project. Answer from the known facts and conversation below.";

/// Embedding dimension for scripted RAG runs.
pub const DEFAULT_EMBEDDING_DIM: usize = 16_384;

pub const EVALUATION_CADENCE: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Capacity,
    Realistic,
    Honest120,
    ConsolidationAblation,
    Cost,
    Replay,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Capacity => "capacity",
            Command::Realistic => "realistic",
            Command::Honest120 => "honest120",
            Command::ConsolidationAblation => "consolidation-ablation",
            Command::Cost => "cost",
            Command::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConsolidatorSpec {
    Rule {
        mode: RuleMode,
        priced_as: String,
    },
    Llm {
        backend: ChatBackendSpec,
        max_output_tokens: u64,
        #[serde(default)]
        priced_as: Option<String>,
    },
}

impl ConsolidatorSpec {
    pub fn rule(mode: RuleMode) -> Self {
        ConsolidatorSpec::Rule {
            mode,
            priced_as: CONSOLIDATION_MODEL.to_string(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConsolidatorSpec::Rule { mode: RuleMode::Exact, .. } => "rule-exact".into(),
            ConsolidatorSpec::Rule { mode: RuleMode::DropHalf, .. } => "rule-drop-half".into(),
            ConsolidatorSpec::Llm { backend, .. } => format!("llm-{}", backend.model),
        }
    }

    /// Model name the consolidation calls are billed under.
    pub fn priced_as(&self) -> String {
        match self {
            ConsolidatorSpec::Rule { priced_as, .. } => priced_as.clone(),
            ConsolidatorSpec::Llm { backend, priced_as, .. } => priced_as.clone().unwrap_or_else(|| backend.model.clone()),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Consolidator>, BackendError> {
        Ok(match self {
            ConsolidatorSpec::Rule { mode, priced_as } => Arc::new(RuleConsolidator::new(*mode).priced_as(priced_as.clone())),
            ConsolidatorSpec::Llm {
                backend,
                max_output_tokens,
                ..
            } => Arc::new(LlmConsolidator::new(backend.build()?, *max_output_tokens)),
        })
    }
}

/// Everything a run depends on. Serialized verbatim as the results
/// directory's config snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub scales: Vec<u64>,
    pub seeds_per_scale: usize,
    pub probes_per_seed: usize,
    pub architectures: Vec<Architecture>,
    pub placements: Vec<Placement>,
    pub chat: ChatBackendSpec,
    /// Model name inference calls are billed under; the backend's own model
    /// name when absent.
    pub inference_priced_as: Option<String>,
    pub consolidator: ConsolidatorSpec,
    /// Consolidators compared by the ablation command.
    pub variants: Vec<ConsolidatorSpec>,
    pub embedding: EmbeddingBackendSpec,
    pub window: usize,
    pub cadence: u64,
    pub execution: ExecutionMode,
    pub top_k: usize,
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
    pub preamble: String,
    /// Filler size for FC and RAG capacity conversations.
    pub fc_filler_tokens: usize,
    /// Filler size for DP capacity conversations.
    pub dp_filler_tokens: usize,
    pub act_mix: ActMix,
    /// FC sliding-window budget; `None` keeps the whole history.
    pub truncation_limit: Option<u64>,
    pub pricing: PricingTable,
    pub cost: CostAssumptions,
}

impl RunConfig {
    /// Defaults for `command` with scripted backends.
    pub fn for_command(command: Command) -> Self {
        let base = Self {
            command,
            seed: 42,
            scales: Vec::new(),
            seeds_per_scale: 1,
            probes_per_seed: 4,
            architectures: vec![Architecture::DualProcess, Architecture::FullContext],
            placements: Vec::new(),
            chat: ChatBackendSpec::scripted(ScriptedBehavior::EchoFactIfPresent),
            inference_priced_as: Some(INFERENCE_MODEL.to_string()),
            consolidator: ConsolidatorSpec::rule(RuleMode::Exact),
            variants: Vec::new(),
            embedding: EmbeddingBackendSpec::scripted(DEFAULT_EMBEDDING_DIM, 7),
            window: crate::episodic::DEFAULT_WINDOW,
            cadence: EVALUATION_CADENCE,
            execution: ExecutionMode::Inline,
            top_k: DEFAULT_TOP_K,
            chunk_tokens: DEFAULT_CHUNK_TOKENS,
            overlap_tokens: DEFAULT_OVERLAP_TOKENS,
            preamble: DEFAULT_PREAMBLE.to_string(),
            fc_filler_tokens: 100,
            dp_filler_tokens: 14,
            act_mix: ActMix::default(),
            truncation_limit: None,
            pricing: PricingTable::default(),
            cost: CostAssumptions::default(),
        };
        match command {
            Command::Capacity => Self {
                scales: CAPACITY_SCALES.to_vec(),
                seeds_per_scale: 5,
                probes_per_seed: 1,
                placements: vec![Placement::Beginning, Placement::Middle, Placement::End],
                truncation_limit: Some(DEFAULT_TRUNCATION_LIMIT),
                ..base
            },
            Command::Realistic => Self {
                scales: REALISTIC_SCALES.to_vec(),
                seeds_per_scale: 5,
                ..base
            },
            Command::Honest120 => Self {
                scales: vec![1_000],
                architectures: vec![Architecture::DualProcess, Architecture::Rag],
                ..base
            },
            Command::ConsolidationAblation => Self {
                scales: vec![1_000],
                architectures: vec![Architecture::DualProcess],
                variants: vec![ConsolidatorSpec::rule(RuleMode::Exact), ConsolidatorSpec::rule(RuleMode::DropHalf)],
                ..base
            },
            Command::Cost => Self {
                scales: vec![10, 25, 50, 100, 500, 1_000, 5_000, 10_000],
                ..base
            },
            Command::Replay => base,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.command == Command::Replay {
            return bad("replay runs from a results directory, not a config".into());
        }
        if self.scales.is_empty() {
            return bad("no scales given".into());
        }
        if let Some(s) = self.scales.iter().find(|s| **s == 0 || **s > 100_000) {
            return bad(format!("scale {s} outside 1..=100000"));
        }
        if self.architectures.is_empty() && self.command != Command::Cost {
            return bad("no architectures selected".into());
        }
        if self.seeds_per_scale == 0 {
            return bad("seeds per scale must be positive".into());
        }
        if self.command == Command::Capacity && self.placements.is_empty() {
            return bad("capacity runs need at least one placement".into());
        }
        if self.command == Command::ConsolidationAblation && self.variants.len() < 2 {
            return bad("the ablation needs at least two consolidator variants".into());
        }
        if self.window == 0 || self.cadence == 0 || self.top_k == 0 {
            return bad("window, cadence, and top-k must be positive".into());
        }
        if self.overlap_tokens >= self.chunk_tokens {
            return bad("chunk overlap must be smaller than the chunk size".into());
        }
        if self.fc_filler_tokens == 0 || self.dp_filler_tokens == 0 {
            return bad("filler sizes must be positive".into());
        }
        self.act_mix.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.chat.validate().map_err(|e| RunError::Config(e.to_string()))?;
        let priced = [self.inference_model(), self.consolidator.priced_as()];
        for model in priced.iter().chain(self.variants.iter().map(|v| v.priced_as()).collect::<Vec<_>>().iter()) {
            if self.pricing.price(model).is_err() {
                return bad(format!("no unit price for model {model:?}"));
            }
        }
        Ok(())
    }

    pub fn inference_model(&self) -> String {
        self.inference_priced_as.clone().unwrap_or_else(|| self.chat.model.clone())
    }

    pub fn spec_hash(&self) -> String {
        provenance_hash(self)
    }

    /// Pretty JSON with a trailing newline.
    pub fn snapshot(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_snapshot(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("bad config snapshot: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for c in [
            Command::Capacity,
            Command::Realistic,
            Command::Honest120,
            Command::ConsolidationAblation,
            Command::Cost,
        ] {
            RunConfig::for_command(c).validate().unwrap();
        }
        assert!(RunConfig::for_command(Command::Replay).validate().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let c = RunConfig::for_command(Command::Capacity);
        let back = RunConfig::from_snapshot(&c.snapshot()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.spec_hash(), c.spec_hash());
    }

    #[test]
    fn unpriced_model_is_a_config_error() {
        let mut c = RunConfig::for_command(Command::Honest120);
        c.inference_priced_as = None;
        assert!(matches!(c.validate(), Err(RunError::Config(_))));
    }

    #[test]
    fn out_of_range_scale_rejected() {
        let mut c = RunConfig::for_command(Command::Capacity);
        c.scales = vec![200_000];
        assert!(c.validate().is_err());
    }
}
