//! Consolidated semantic profile and the pipeline that maintains it.

mod consolidate;
mod engine;
mod prompt;

use serde::{Deserialize, Serialize};

use crate::tokens::TokenCounter;

pub use consolidate::{
    consolidate, should_consolidate, ConflictRule, ConsolidationError, ConsolidationOutcome,
    ConsolidationPolicy, Consolidator, LlmConsolidator, RuleConsolidator, RuleMode,
};
pub use engine::{
    ConsolidationEvent, ConsolidationJob, ConsolidationLog, DualProcessConfig, DualProcessMemory,
    ExecutionMode, ProfileStore,
};
pub use prompt::{
    build_consolidation_prompt, ConsolidationRequest, PromptError, DEFAULT_TEMPLATE,
    REQUIRED_DIRECTIVES,
};

/// Tokens at which a growing profile starts logging warnings.
pub const SOFT_WARNING_TOKENS: u64 = 120_000;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SemanticProfile {
    pub version: u64,
    pub last_consolidated_index: Option<u64>,
    pub token_count: u64,
    pub text: String,
}

impl SemanticProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The next version after a successful consolidation.
    pub fn successor(&self, text: String, through_index: u64, counter: &TokenCounter) -> Self {
        let last = self
            .last_consolidated_index
            .map_or(through_index, |prev| prev.max(through_index));
        Self {
            version: self.version + 1,
            last_consolidated_index: Some(last),
            token_count: counter.count(&text) as u64,
            text,
        }
    }
}

/// `(message_count, profile_tokens)` for each consolidation event.
pub fn profile_growth_series(events: &[ConsolidationEvent]) -> Vec<(u64, u64)> {
    events
        .iter()
        .map(|e| (e.message_count, e.profile_tokens))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successor_increments_version() {
        let c = TokenCounter::default();
        let p = SemanticProfile::empty().successor("FACT a=1;".into(), 9, &c);
        assert_eq!(p.version, 1);
        assert_eq!(p.last_consolidated_index, Some(9));
        assert_eq!(p.token_count, c.count("FACT a=1;") as u64);
        let q = p.successor(String::new(), 3, &c);
        assert_eq!(q.version, 2);
        assert_eq!(q.last_consolidated_index, Some(9));
    }

    #[test]
    fn empty_run_has_empty_series() {
        assert!(profile_growth_series(&[]).is_empty());
    }
}
