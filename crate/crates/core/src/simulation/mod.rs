//! Seeded synthetic workloads and probe questions.

mod baseline;
mod capacity;
pub mod corpus;
mod queries;
mod realistic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{FactError, FactTable};

pub use baseline::{baseline_scenario, BASELINE_MESSAGES};
pub use capacity::{
    generate_capacity_run, generate_growth_run, placement_band, resolve_placement, CapacityRun,
    CAPACITY_SCALES,
};
pub use queries::{generate_honest_run, generate_query_suite, HonestRun, HONEST_CASES_PER_TYPE};
pub use queries::question;
pub use realistic::{
    generate_realistic_run, RealisticRun, DATASET_KEY, DATASET_VALUE, REALISTIC_SCALES, THRESHOLD_KEY, THRESHOLD_VALUES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("conversation length must be positive")]
    EmptyRun,
    #[error("explicit fact index {index} outside a run of {len} messages")]
    IndexOutOfRange { index: u64, len: u64 },
    #[error("act mix must be non-negative and sum to 1 (got {0})")]
    BadMix(f64),
    #[error(transparent)]
    Fact(#[from] FactError),
    #[error("generated case {question:?} is not answerable from the log")]
    Unanswerable { question: String },
    #[error("log too short for the query suite: {0}")]
    TooShort(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Beginning,
    Middle,
    End,
    Index(u64),
}

impl Placement {
    pub fn label(self) -> String {
        match self {
            Placement::Beginning => "beginning".into(),
            Placement::Middle => "middle".into(),
            Placement::End => "end".into(),
            Placement::Index(i) => format!("index {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactSpec {
    pub key: String,
    pub value: String,
    pub placement: Placement,
}

impl FactSpec {
    pub fn new(key: impl Into<String>, value: impl Into<String>, placement: Placement) -> Result<Self, GenerationError> {
        let (key, value) = (key.into(), value.into());
        crate::facts::validate(&key, &value)?;
        Ok(Self { key, value, placement })
    }
}

/// Successive values of one key at strictly increasing message indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionSchedule {
    pub key: String,
    pub values: Vec<String>,
    pub indices: Vec<u64>,
}

impl ContradictionSchedule {
    pub fn is_valid(&self, len: u64) -> bool {
        self.values.len() >= 2
            && self.values.len() == self.indices.len()
            && self.indices.windows(2).all(|w| w[0] < w[1])
            && self.indices.last().is_some_and(|&i| i < len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    RecentState,
    HistoricalRetrieval,
    Contradictory,
    TemporalSequence,
    MultiHop,
    LongTerm,
}

impl QueryType {
    pub const ALL: [QueryType; 6] = [
        QueryType::RecentState,
        QueryType::HistoricalRetrieval,
        QueryType::Contradictory,
        QueryType::TemporalSequence,
        QueryType::MultiHop,
        QueryType::LongTerm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QueryType::RecentState => "recent_state",
            QueryType::HistoricalRetrieval => "historical_retrieval",
            QueryType::Contradictory => "contradictory",
            QueryType::TemporalSequence => "temporal_sequence",
            QueryType::MultiHop => "multi_hop",
            QueryType::LongTerm => "long_term",
        }
    }

    /// Expected answer parts for a case over `keys`, read from the log.
    pub fn expected_from(self, keys: &[String], table: &FactTable) -> Option<Vec<String>> {
        let k0 = keys.first()?;
        let values = table.values(k0);
        match self {
            QueryType::RecentState | QueryType::LongTerm => Some(vec![table.latest(k0)?.to_string()]),
            QueryType::HistoricalRetrieval => Some(vec![table.first(k0)?.to_string()]),
            QueryType::Contradictory if values.len() >= 2 => Some(vec![
                values[values.len() - 2].to_string(),
                values[values.len() - 1].to_string(),
            ]),
            QueryType::TemporalSequence if values.len() >= 2 => Some(vec![values.join(", ")]),
            QueryType::MultiHop => {
                let k1 = keys.get(1)?;
                Some(vec![table.latest(k0)?.to_string(), table.latest(k1)?.to_string()])
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCase {
    pub query_type: QueryType,
    pub question: String,
    /// Every part must be matched for the case to count as answered.
    pub expected_parts: Vec<String>,
    pub keys: Vec<String>,
    pub supporting_indices: Vec<u64>,
    /// The probed key was asserted exactly once.
    pub unique: bool,
}

impl QueryCase {
    pub fn expected(&self) -> String {
        self.expected_parts.join(" | ")
    }

    /// Recomputes the expected answer from the raw log.
    pub fn verify(&self, table: &FactTable) -> Result<(), GenerationError> {
        match self.query_type.expected_from(&self.keys, table) {
            Some(parts) if parts == self.expected_parts => Ok(()),
            _ => Err(GenerationError::Unanswerable {
                question: self.question.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActMix {
    pub directive: f64,
    pub state_update: f64,
    pub experimental_log: f64,
    pub noise: f64,
}

impl Default for ActMix {
    fn default() -> Self {
        Self {
            directive: 0.20,
            state_update: 0.15,
            experimental_log: 0.25,
            noise: 0.40,
        }
    }
}

impl ActMix {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let parts = [self.directive, self.state_update, self.experimental_log, self.noise];
        let sum: f64 = parts.iter().sum();
        if parts.iter().any(|p| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(GenerationError::BadMix(sum));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Capacity,
    Realistic,
    BaselineScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub total_messages: u64,
    pub seed: u64,
    pub act_mix: ActMix,
    pub scales: Vec<u64>,
    pub probes_per_seed: usize,
    pub seeds_per_scale: usize,
}

impl WorkloadSpec {
    pub fn realistic(total_messages: u64, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::Realistic,
            total_messages,
            seed,
            act_mix: ActMix::default(),
            scales: REALISTIC_SCALES.to_vec(),
            probes_per_seed: 4,
            seeds_per_scale: 5,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.total_messages == 0 {
            return Err(GenerationError::EmptyRun);
        }
        self.act_mix.validate()
    }
}
