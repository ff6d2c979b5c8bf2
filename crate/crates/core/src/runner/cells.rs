use std::sync::Arc;

use super::config::{ConsolidatorSpec, RunConfig};
use super::{GrowthPoint, RunError};
use crate::backends::{chat_complete, BackendError, CallOutcome, CallRecord, ChatBackend, Completion, EmbeddingBackend};
use crate::context::AssembledContext;
use crate::evaluation::{BenchmarkRecord, CallKind, Cell};
use crate::full_context::{full_context_answer_context, FullContextLimits, FullHistory};
use crate::message::Message;
use crate::profile::{ConsolidationPolicy, DualProcessConfig, DualProcessMemory, DEFAULT_TEMPLATE};
use crate::simulation::QueryCase;
use crate::tokens::TokenCounter;
use crate::vector::{build_index, rag_answer_context};

/// Backends and settings shared by every cell of one run.
pub(super) struct Env {
    pub config: RunConfig,
    pub chat: Arc<dyn ChatBackend>,
    pub embedder: Arc<dyn EmbeddingBackend>,
    pub counter: TokenCounter,
    pub inference_model: String,
}

impl Env {
    pub fn new(config: &RunConfig) -> Result<Self, RunError> {
        Ok(Self {
            config: config.clone(),
            chat: config.chat.build()?,
            embedder: config.embedding.build()?,
            counter: TokenCounter::default(),
            inference_model: config.inference_model(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub(super) struct CellOutcome {
    pub records: Vec<BenchmarkRecord>,
    pub growth: Vec<GrowthPoint>,
    pub profile_tokens: Option<u64>,
}

/// Deterministic per-cell seed.
pub(super) fn cell_seed(base: u64, scale: u64, slot: u64) -> u64 {
    let mut z = base
        .wrapping_add(scale.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(slot.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn ask(env: &Env, ctx: &AssembledContext) -> Completion {
    chat_complete(
        env.chat.as_ref(),
        ctx,
        env.config.chat.temperature,
        env.config.chat.max_output_tokens,
    )
}

/// Scores a completion. Overflow is a recorded outcome; any other backend
/// failure aborts the run.
fn score(env: &Env, cell: Cell, case: &QueryCase, completion: Completion) -> Result<BenchmarkRecord, RunError> {
    let answer = match &completion.result {
        Ok(text) => Some(text.as_str()),
        Err(BackendError::Overflow { .. }) => None,
        Err(e) => return Err(e.clone().into()),
    };
    Ok(BenchmarkRecord::probe(
        cell,
        case,
        &env.inference_model,
        answer,
        &completion.record,
        &env.config.pricing,
    )?)
}

/// Sums a cell's calls into one accounting record. Prices are linear in
/// tokens, so the cost equals the sum of per-call costs.
pub(super) fn aggregate(
    env: &Env,
    cell: Cell,
    kind: CallKind,
    model: &str,
    calls: &[CallRecord],
) -> Result<Option<BenchmarkRecord>, RunError> {
    if calls.is_empty() {
        return Ok(None);
    }
    let total = CallRecord {
        input_tokens: calls.iter().map(|c| c.input_tokens).sum(),
        output_tokens: calls.iter().map(|c| c.output_tokens).sum(),
        latency_ms: calls.iter().map(|c| c.latency_ms).sum(),
        simulated: calls.iter().all(|c| c.simulated),
        outcome: if calls.iter().all(|c| c.outcome == CallOutcome::Ok) {
            CallOutcome::Ok
        } else {
            CallOutcome::Error
        },
    };
    Ok(Some(BenchmarkRecord::accounting(cell, kind, model, &total, &env.config.pricing)?))
}

pub(super) fn run_dual_process(
    env: &Env,
    consolidator: &ConsolidatorSpec,
    cell: Cell,
    messages: &[Message],
    cases: &[QueryCase],
) -> Result<CellOutcome, RunError> {
    let c = &env.config;
    let dp_config = DualProcessConfig {
        window: c.window,
        policy: ConsolidationPolicy::with_cadence(c.cadence),
        preamble: c.preamble.clone(),
        template: DEFAULT_TEMPLATE.to_string(),
        mode: c.execution,
    };
    let mut memory = DualProcessMemory::new(dp_config, consolidator.build()?, env.counter.clone())
        .map_err(|e| RunError::Config(e.to_string()))?;
    for m in messages {
        memory.ingest(m.clone()).map_err(|e| RunError::Step(e.to_string()))?;
    }
    memory.flush();
    let mut records = Vec::with_capacity(cases.len() + 1);
    for case in cases {
        let ctx = memory.context(&case.question).map_err(|e| RunError::Step(e.to_string()))?;
        records.push(score(env, cell, case, ask(env, &ctx))?);
    }
    let (calls, failures) = {
        let log = memory.store().log();
        (log.calls.clone(), log.failures.len())
    };
    if failures > 0 {
        log::warn!(
            "{} consolidation(s) failed in cell {:?}/{}/{}",
            failures,
            cell.architecture,
            cell.scale,
            cell.seed
        );
    }
    records.extend(aggregate(env, cell, CallKind::Consolidation, &consolidator.priced_as(), &calls)?);
    let growth = memory
        .growth_series()
        .into_iter()
        .map(|(messages, profile_tokens)| GrowthPoint {
            scale: cell.scale,
            seed: cell.seed,
            messages,
            profile_tokens,
        })
        .collect();
    Ok(CellOutcome {
        records,
        growth,
        profile_tokens: Some(memory.profile().token_count),
    })
}

pub(super) fn run_full_context(
    env: &Env,
    cell: Cell,
    messages: &[Message],
    cases: &[QueryCase],
) -> Result<CellOutcome, RunError> {
    let mut history = FullHistory::new(FullContextLimits {
        truncation_limit: env.config.truncation_limit,
        hard_model_limit: env.chat.hard_limit(),
    });
    for m in messages {
        history
            .append_and_truncate(m.clone())
            .map_err(|e| RunError::Step(e.to_string()))?;
    }
    let mut records = Vec::with_capacity(cases.len());
    for case in cases {
        let outcome = full_context_answer_context(&history, &env.config.preamble, &case.question, &env.counter)
            .map_err(|e| RunError::Step(e.to_string()))?;
        records.push(score(env, cell, case, ask(env, outcome.context()))?);
    }
    Ok(CellOutcome {
        records,
        ..CellOutcome::default()
    })
}

pub(super) fn run_rag(env: &Env, cell: Cell, messages: &[Message], cases: &[QueryCase]) -> Result<CellOutcome, RunError> {
    let c = &env.config;
    let index = build_index(
        messages,
        env.embedder.as_ref(),
        c.chunk_tokens,
        c.overlap_tokens,
        &env.counter,
    )
    .map_err(vector_err)?;
    let mut records = Vec::with_capacity(cases.len());
    for case in cases {
        let rag = rag_answer_context(
            &index,
            env.embedder.as_ref(),
            &c.preamble,
            &case.question,
            c.top_k,
            &env.counter,
        )
        .map_err(vector_err)?;
        let ids = rag.hits.iter().map(|h| h.chunk.id).collect();
        records.push(score(env, cell, case, ask(env, &rag.context))?.with_retrieved(ids));
    }
    Ok(CellOutcome {
        records,
        ..CellOutcome::default()
    })
}

fn vector_err(e: crate::vector::VectorError) -> RunError {
    match e {
        crate::vector::VectorError::Backend(b) => RunError::Backend(b),
        other => RunError::Step(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seeds_differ() {
        let a = cell_seed(42, 100, 0);
        assert_ne!(a, cell_seed(42, 100, 1));
        assert_ne!(a, cell_seed(42, 500, 0));
        assert_eq!(a, cell_seed(42, 100, 0));
    }
}
