use serde::{Deserialize, Serialize};

use super::cost::{CostError, Money, PricingTable};
use super::matcher::match_all;
use crate::backends::{CallOutcome, CallRecord};
use crate::simulation::{QueryCase, QueryType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    DualProcess,
    Rag,
    FullContext,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::DualProcess, Architecture::Rag, Architecture::FullContext];

    pub fn label(self) -> &'static str {
        match self {
            Architecture::DualProcess => "dual_process",
            Architecture::Rag => "rag",
            Architecture::FullContext => "full_context",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Architecture::DualProcess => "DP",
            Architecture::Rag => "RAG",
            Architecture::FullContext => "FC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp" | "dual_process" | "dual-process" => Some(Architecture::DualProcess),
            "rag" => Some(Architecture::Rag),
            "fc" | "full_context" | "full-context" => Some(Architecture::FullContext),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Inference,
    Consolidation,
}

/// One model call made during a benchmark. Inference records carry the
/// probe; consolidation records carry only accounting.
///
/// Field order is the serialized order and is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub architecture: Architecture,
    pub scale: u64,
    pub seed: u64,
    pub call_kind: CallKind,
    pub model: String,
    pub query_type: Option<QueryType>,
    pub placement: Option<String>,
    /// Consolidator variant label in ablation runs.
    pub variant: Option<String>,
    pub question: String,
    pub expected: String,
    pub actual: String,
    pub matched: bool,
    pub latency_ms: f64,
    pub simulated_latency: bool,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub outcome: CallOutcome,
    pub cost: Money,
    pub retrieved_chunks: Vec<u64>,
}

/// Identifies the cell a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub architecture: Architecture,
    pub scale: u64,
    pub seed: u64,
}

impl BenchmarkRecord {
    /// Scores a probe answer. `matched` is false unless the call succeeded
    /// and every expected part matches.
    pub fn probe(
        cell: Cell,
        case: &QueryCase,
        model: &str,
        answer: Option<&str>,
        call: &CallRecord,
        pricing: &PricingTable,
    ) -> Result<Self, CostError> {
        let actual = answer.unwrap_or_default().to_string();
        let matched = call.outcome == CallOutcome::Ok && match_all(&case.expected_parts, &actual);
        Ok(Self {
            architecture: cell.architecture,
            scale: cell.scale,
            seed: cell.seed,
            call_kind: CallKind::Inference,
            model: model.to_string(),
            query_type: Some(case.query_type),
            placement: None,
            variant: None,
            question: case.question.clone(),
            expected: case.expected(),
            actual,
            matched,
            latency_ms: call.latency_ms,
            simulated_latency: call.simulated,
            input_tokens: call.input_tokens,
            output_tokens: call.output_tokens,
            outcome: call.outcome,
            cost: pricing.call_cost(model, call.input_tokens, call.output_tokens)?,
            retrieved_chunks: Vec::new(),
        })
    }

    pub fn consolidation(cell: Cell, model: &str, call: &CallRecord, pricing: &PricingTable) -> Result<Self, CostError> {
        Self::accounting(cell, CallKind::Consolidation, model, call, pricing)
    }

    /// A record with accounting fields only.
    pub fn accounting(
        cell: Cell,
        call_kind: CallKind,
        model: &str,
        call: &CallRecord,
        pricing: &PricingTable,
    ) -> Result<Self, CostError> {
        Ok(Self {
            architecture: cell.architecture,
            scale: cell.scale,
            seed: cell.seed,
            call_kind,
            model: model.to_string(),
            query_type: None,
            placement: None,
            variant: None,
            question: String::new(),
            expected: String::new(),
            actual: String::new(),
            matched: false,
            latency_ms: call.latency_ms,
            simulated_latency: call.simulated,
            input_tokens: call.input_tokens,
            output_tokens: call.output_tokens,
            outcome: call.outcome,
            cost: pricing.call_cost(model, call.input_tokens, call.output_tokens)?,
            retrieved_chunks: Vec::new(),
        })
    }

    pub fn with_placement(mut self, label: impl Into<String>) -> Self {
        self.placement = Some(label.into());
        self
    }

    pub fn with_variant(mut self, label: impl Into<String>) -> Self {
        self.variant = Some(label.into());
        self
    }

    pub fn with_retrieved(mut self, ids: Vec<u64>) -> Self {
        self.retrieved_chunks = ids;
        self
    }

    pub fn is_probe(&self) -> bool {
        self.call_kind == CallKind::Inference
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case() -> QueryCase {
        QueryCase {
            query_type: QueryType::RecentState,
            question: "What is the current value of p_threshold? [keys: p_threshold]".into(),
            expected_parts: vec!["0.001".into()],
            keys: vec!["p_threshold".into()],
            supporting_indices: vec![5],
            unique: false,
        }
    }

    fn call(outcome: CallOutcome) -> CallRecord {
        CallRecord {
            input_tokens: 1_000,
            output_tokens: 10,
            latency_ms: 600.0,
            simulated: true,
            outcome,
        }
    }

    const CELL: Cell = Cell {
        architecture: Architecture::FullContext,
        scale: 10,
        seed: 1,
    };

    #[test]
    fn overflow_never_matches() {
        let p = PricingTable::default();
        let r = BenchmarkRecord::probe(CELL, &case(), "gpt-4o", Some("p<0.001"), &call(CallOutcome::Overflow), &p).unwrap();
        assert!(!r.matched);
        let ok = BenchmarkRecord::probe(CELL, &case(), "gpt-4o", Some("p<0.001"), &call(CallOutcome::Ok), &p).unwrap();
        assert!(ok.matched);
    }

    #[test]
    fn unpriced_model_is_an_error() {
        let p = PricingTable::default();
        assert!(BenchmarkRecord::probe(CELL, &case(), "mystery", None, &call(CallOutcome::Ok), &p).is_err());
    }

    #[test]
    fn architecture_names_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(Architecture::parse(a.label()), Some(a));
            assert_eq!(Architecture::parse(a.short()), Some(a));
        }
    }
}
