//! Prices, run totals, and the modeled token curves behind the cost report.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::records::{Architecture, BenchmarkRecord, CallKind, Cell};
use crate::backends::{CallOutcome, CallRecord};

pub const INFERENCE_MODEL: &str = "gpt-4o";
pub const CONSOLIDATION_MODEL: &str = "gpt-4o-mini";

const PICOS_PER_DOLLAR: u64 = 1_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("no pricing entry for model {0:?}")]
    MissingPrice(String),
    #[error("price must be a finite non-negative number, got {0}")]
    BadPrice(String),
    #[error("cost series cover different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
}

/// An amount in integer picodollars, so sums are exact and associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn dollars(self) -> f64 {
        self.0 as f64 / PICOS_PER_DOLLAR as f64
    }

    pub fn from_dollars(d: f64) -> Result<Self, CostError> {
        if !d.is_finite() || d < 0.0 {
            return Err(CostError::BadPrice(d.to_string()));
        }
        Ok(Money((d * PICOS_PER_DOLLAR as f64).round() as u64))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${:.2}", self.dollars())
    }
}

/// Per-token prices in picodollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input_per_token: u64,
    pub output_per_token: u64,
}

impl ModelPrice {
    /// From dollars per million tokens.
    pub fn per_million(input: f64, output: f64) -> Result<Self, CostError> {
        Ok(Self {
            input_per_token: Money::from_dollars(input)?.0 / 1_000_000,
            output_per_token: Money::from_dollars(output)?.0 / 1_000_000,
        })
    }

    pub fn input_per_million(&self) -> f64 {
        Money(self.input_per_token * 1_000_000).dollars()
    }

    pub fn output_per_million(&self) -> f64 {
        Money(self.output_per_token * 1_000_000).dollars()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricingTable {
    pub models: BTreeMap<String, ModelPrice>,
}

impl Default for PricingTable {
    /// Inference at $2.50 / $10.00 and consolidation at $0.15 / $0.60 per
    /// million input / output tokens.
    fn default() -> Self {
        let mut models = BTreeMap::new();
        models.insert(
            INFERENCE_MODEL.to_string(),
            ModelPrice::per_million(2.50, 10.00).expect("valid"),
        );
        models.insert(
            CONSOLIDATION_MODEL.to_string(),
            ModelPrice::per_million(0.15, 0.60).expect("valid"),
        );
        Self { models }
    }
}

impl PricingTable {
    pub fn price(&self, model: &str) -> Result<&ModelPrice, CostError> {
        self.models
            .get(model)
            .ok_or_else(|| CostError::MissingPrice(model.to_string()))
    }

    pub fn call_cost(&self, model: &str, input_tokens: u64, output_tokens: u64) -> Result<Money, CostError> {
        let p = self.price(model)?;
        Ok(Money(input_tokens * p.input_per_token + output_tokens * p.output_per_token))
    }
}

/// Total priced cost of every call in `records`.
pub fn run_cost(records: &[BenchmarkRecord], pricing: &PricingTable) -> Result<Money, CostError> {
    records
        .iter()
        .map(|r| pricing.call_cost(&r.model, r.input_tokens, r.output_tokens))
        .sum()
}

/// Smallest message count at which cumulative DP cost drops below
/// cumulative FC cost, given per-message costs for messages 1..=n.
pub fn crossover_point(dp_costs: &[Money], fc_costs: &[Money]) -> Result<Option<u64>, CostError> {
    if dp_costs.len() != fc_costs.len() {
        return Err(CostError::GridMismatch(dp_costs.len(), fc_costs.len()));
    }
    let (mut dp, mut fc) = (0u64, 0u64);
    for (i, (d, f)) in dp_costs.iter().zip(fc_costs).enumerate() {
        dp += d.0;
        fc += f.0;
        if dp < fc {
            return Ok(Some(i as u64 + 1));
        }
    }
    Ok(None)
}

/// The token curves under which modeled cost totals are computed. Every
/// message triggers one inference call; DP additionally pays consolidation
/// every `consolidation_every` messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAssumptions {
    pub preamble_tokens: u64,
    pub query_tokens: u64,
    pub output_tokens: u64,
    pub history_tokens_per_message: u64,
    pub truncation_limit: u64,
    pub profile_slope: f64,
    pub profile_intercept: f64,
    pub window: u64,
    pub consolidation_overhead_tokens: u64,
    pub consolidation_every: u64,
}

impl Default for CostAssumptions {
    fn default() -> Self {
        Self {
            preamble_tokens: 200,
            query_tokens: 10,
            output_tokens: 200,
            history_tokens_per_message: 40,
            truncation_limit: 120_000,
            profile_slope: 3.03,
            profile_intercept: 78.5,
            window: 10,
            consolidation_overhead_tokens: 80,
            consolidation_every: 1,
        }
    }
}

impl CostAssumptions {
    pub fn describe(&self) -> Vec<String> {
        vec![
            format!(
                "every message triggers one inference call with a {}-token preamble, a {}-token query, and {} output tokens",
                self.preamble_tokens, self.query_tokens, self.output_tokens
            ),
            format!(
                "FC input grows by {} tokens per message of serialized history, capped at {}",
                self.history_tokens_per_message, self.truncation_limit
            ),
            format!(
                "DP profile after i messages holds {:.2}*i + {:.1} tokens; the window holds min(i, {}) messages",
                self.profile_slope, self.profile_intercept, self.window
            ),
            format!(
                "DP consolidation every {} message(s) reads profile + window + {} instruction tokens and writes the profile",
                self.consolidation_every, self.consolidation_overhead_tokens
            ),
            format!("inference priced as {INFERENCE_MODEL}, consolidation as {CONSOLIDATION_MODEL}"),
        ]
    }

    fn profile_tokens(&self, i: u64) -> u64 {
        (self.profile_slope * i as f64 + self.profile_intercept).round() as u64
    }

    fn window_tokens(&self, i: u64) -> u64 {
        i.min(self.window) * self.history_tokens_per_message
    }

    /// History tokens FC would need without truncation.
    pub fn fc_history_tokens(&self, i: u64) -> u64 {
        i * self.history_tokens_per_message
    }

    /// Modeled calls for message `i` (1-based).
    pub fn calls_at(&self, architecture: Architecture, i: u64) -> Vec<(CallKind, &'static str, CallRecord)> {
        let call = |input_tokens, output_tokens| CallRecord {
            input_tokens,
            output_tokens,
            latency_ms: 0.0,
            simulated: true,
            outcome: CallOutcome::Ok,
        };
        let fixed = self.preamble_tokens + self.query_tokens;
        match architecture {
            Architecture::FullContext => {
                let history = self.fc_history_tokens(i).min(self.truncation_limit);
                vec![(CallKind::Inference, INFERENCE_MODEL, call(fixed + history, self.output_tokens))]
            }
            Architecture::DualProcess => {
                let (profile, window) = (self.profile_tokens(i), self.window_tokens(i));
                let mut calls = vec![(
                    CallKind::Inference,
                    INFERENCE_MODEL,
                    call(fixed + profile + window, self.output_tokens),
                )];
                if i % self.consolidation_every.max(1) == 0 {
                    calls.push((
                        CallKind::Consolidation,
                        CONSOLIDATION_MODEL,
                        call(profile + window + self.consolidation_overhead_tokens, profile),
                    ));
                }
                calls
            }
            Architecture::Rag => Vec::new(),
        }
    }

    /// Modeled records for a conversation of `len` messages.
    pub fn records(
        &self,
        architecture: Architecture,
        len: u64,
        pricing: &PricingTable,
    ) -> Result<Vec<BenchmarkRecord>, CostError> {
        let cell = Cell {
            architecture,
            scale: len,
            seed: 0,
        };
        let mut out = Vec::new();
        for i in 1..=len {
            for (kind, model, call) in self.calls_at(architecture, i) {
                out.push(BenchmarkRecord::accounting(cell, kind, model, &call, pricing)?);
            }
        }
        Ok(out)
    }

    /// Per-message modeled cost for messages 1..=len.
    pub fn per_message_costs(
        &self,
        architecture: Architecture,
        len: u64,
        pricing: &PricingTable,
    ) -> Result<Vec<Money>, CostError> {
        (1..=len)
            .map(|i| {
                self.calls_at(architecture, i)
                    .iter()
                    .map(|(_, model, c)| pricing.call_cost(model, c.input_tokens, c.output_tokens))
                    .sum()
            })
            .collect()
    }
}
