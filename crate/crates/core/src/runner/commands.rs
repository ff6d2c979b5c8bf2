use std::collections::BTreeMap;

use rayon::prelude::*;

use super::cells::{aggregate, cell_seed, run_dual_process, run_full_context, run_rag, CellOutcome, Env};
use super::config::{Command, ConsolidatorSpec, RunConfig};
use super::{GrowthPoint, RunError, RunOutput};
use crate::evaluation::{
    fit_growth_law, run_cost, summarize_by_type, summarize_placements, summarize_scales, summarize_variants,
    Architecture, CallKind, Cell, CostRow, CostSection, Money, Report, ReportMeta, CONSOLIDATION_MODEL,
    INFERENCE_MODEL,
};
use crate::message::Message;
use crate::simulation::{
    generate_capacity_run, generate_honest_run, generate_realistic_run, FactSpec, Placement, QueryCase, WorkloadKind,
    WorkloadSpec,
};

pub(super) fn dispatch(config: &RunConfig) -> Result<RunOutput, RunError> {
    let env = Env::new(config)?;
    match config.command {
        Command::Capacity => capacity(&env),
        Command::Realistic => realistic(&env),
        Command::Honest120 => honest120(&env),
        Command::ConsolidationAblation => ablation(&env),
        Command::Cost => cost(&env),
        Command::Replay => Err(RunError::Config("replay needs a results directory".into())),
    }
}

fn meta(env: &Env, title: &str, seeds: Vec<u64>, notes: Vec<String>) -> ReportMeta {
    ReportMeta {
        title: title.to_string(),
        spec_hash: env.config.spec_hash(),
        seeds,
        backend_kind: format!("{:?} ({})", env.config.chat.kind, env.config.chat.model),
        simulated_latency: env.chat.simulated(),
        notes,
    }
}

fn run_arch(env: &Env, arch: Architecture, cell: Cell, messages: &[Message], cases: &[QueryCase]) -> Result<CellOutcome, RunError> {
    match arch {
        Architecture::DualProcess => run_dual_process(env, &env.config.consolidator, cell, messages, cases),
        Architecture::FullContext => run_full_context(env, cell, messages, cases),
        Architecture::Rag => run_rag(env, cell, messages, cases),
    }
}

fn merge(outcomes: Vec<CellOutcome>) -> (Vec<crate::evaluation::BenchmarkRecord>, Vec<GrowthPoint>) {
    let mut records = Vec::new();
    let mut growth = Vec::new();
    for o in outcomes {
        records.extend(o.records);
        growth.extend(o.growth);
    }
    (records, growth)
}

fn seeds_of(records: &[crate::evaluation::BenchmarkRecord]) -> Vec<u64> {
    records.iter().map(|r| r.seed).collect()
}

fn capacity_fact(seed: u64, placement: Placement) -> Result<FactSpec, RunError> {
    Ok(FactSpec::new(
        "cohort_id",
        format!("TCGA-PAAD-{}", 100 + seed % 900),
        placement,
    )?)
}

fn capacity(env: &Env) -> Result<RunOutput, RunError> {
    let c = &env.config;
    let mut jobs = Vec::new();
    for &scale in &c.scales {
        for (p, &placement) in c.placements.iter().enumerate() {
            for s in 0..c.seeds_per_scale as u64 {
                let seed = cell_seed(c.seed, scale, p as u64 * 1_000 + s);
                for &arch in &c.architectures {
                    jobs.push((scale, placement, seed, arch));
                }
            }
        }
    }
    let outcomes = jobs
        .par_iter()
        .map(|&(scale, placement, seed, arch)| {
            let filler = match arch {
                Architecture::DualProcess => c.dp_filler_tokens,
                _ => c.fc_filler_tokens,
            };
            let fact = capacity_fact(seed, placement)?;
            let run = generate_capacity_run(scale, &fact, seed, filler, &env.counter)?;
            let cell = Cell {
                architecture: arch,
                scale,
                seed,
            };
            let mut out = run_arch(env, arch, cell, &run.messages, std::slice::from_ref(&run.case))?;
            let label = placement.label();
            out.records = out.records.into_iter().map(|r| r.with_placement(label.clone())).collect();
            Ok(out)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let (records, growth) = merge(outcomes);
    let notes = vec![
        format!(
            "one planted fact per conversation; {}-token fillers for FC and RAG, {}-token fillers for DP",
            c.fc_filler_tokens, c.dp_filler_tokens
        ),
        format!(
            "FC truncation budget: {}",
            c.truncation_limit.map_or("none".to_string(), |t| format!("{t} tokens"))
        ),
    ];
    let report = Report {
        meta: meta(env, "Capacity scaling", seeds_of(&records), notes),
        scales: summarize_scales(&records),
        placements: summarize_placements(&records),
        ..Report::default()
    };
    Ok(RunOutput { records, growth, report })
}

fn growth_fit(growth: &[GrowthPoint]) -> Option<crate::evaluation::GrowthFit> {
    let series: Vec<(u64, u64)> = growth.iter().map(|p| (p.messages, p.profile_tokens)).collect();
    fit_growth_law(&series).ok()
}

fn realistic(env: &Env) -> Result<RunOutput, RunError> {
    let c = &env.config;
    let mut jobs = Vec::new();
    for &scale in &c.scales {
        for s in 0..c.seeds_per_scale as u64 {
            jobs.push((scale, cell_seed(c.seed, scale, s)));
        }
    }
    let outcomes = jobs
        .par_iter()
        .map(|&(scale, seed)| {
            let spec = WorkloadSpec {
                kind: WorkloadKind::Realistic,
                total_messages: scale,
                seed,
                act_mix: c.act_mix.clone(),
                scales: c.scales.clone(),
                probes_per_seed: c.probes_per_seed,
                seeds_per_scale: c.seeds_per_scale,
            };
            let run = generate_realistic_run(&spec, &env.counter)?;
            let cases = &run.cases[..c.probes_per_seed.min(run.cases.len())];
            c.architectures
                .iter()
                .map(|&arch| {
                    let cell = Cell {
                        architecture: arch,
                        scale,
                        seed,
                    };
                    run_arch(env, arch, cell, &run.messages, cases)
                })
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let (records, growth) = merge(outcomes.into_iter().flatten().collect());
    let notes = vec![
        format!("{} probes per seed, {} seeds per scale", c.probes_per_seed, c.seeds_per_scale),
        format!(
            "FC truncation budget: {}; hard model limit {} tokens",
            c.truncation_limit.map_or("none".to_string(), |t| format!("{t} tokens")),
            env.chat.hard_limit()
        ),
    ];
    let report = Report {
        meta: meta(env, "Realistic simulation", seeds_of(&records), notes),
        scales: summarize_scales(&records),
        by_type: summarize_by_type(&records),
        growth: growth_fit(&growth),
        ..Report::default()
    };
    Ok(RunOutput { records, growth, report })
}

fn honest120(env: &Env) -> Result<RunOutput, RunError> {
    let c = &env.config;
    let seeds: Vec<u64> = (0..c.seeds_per_scale as u64).map(|s| cell_seed(c.seed, 0, s)).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&seed| {
            let run = generate_honest_run(seed, &env.counter)?;
            let scale = run.messages.len() as u64;
            c.architectures
                .iter()
                .map(|&arch| {
                    let cell = Cell {
                        architecture: arch,
                        scale,
                        seed,
                    };
                    run_arch(env, arch, cell, &run.messages, &run.cases)
                })
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let (records, growth) = merge(outcomes.into_iter().flatten().collect());
    let notes = vec![format!(
        "120 generated queries, 20 per type; RAG top-{} over {}-token chunks with {}-token overlap",
        c.top_k, c.chunk_tokens, c.overlap_tokens
    )];
    let report = Report {
        meta: meta(env, "Query-type evaluation", seeds_of(&records), notes),
        scales: summarize_scales(&records),
        by_type: summarize_by_type(&records),
        ..Report::default()
    };
    Ok(RunOutput { records, growth, report })
}

fn ablation(env: &Env) -> Result<RunOutput, RunError> {
    let c = &env.config;
    let seeds: Vec<u64> = (0..c.seeds_per_scale as u64).map(|s| cell_seed(c.seed, 0, s)).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&seed| {
            let run = generate_honest_run(seed, &env.counter)?;
            let cell = Cell {
                architecture: Architecture::DualProcess,
                scale: run.messages.len() as u64,
                seed,
            };
            c.variants
                .iter()
                .map(|v: &ConsolidatorSpec| {
                    let mut out = run_dual_process(env, v, cell, &run.messages, &run.cases)?;
                    let label = v.label();
                    out.records = out.records.into_iter().map(|r| r.with_variant(label.clone())).collect();
                    Ok((label, out))
                })
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut sizes: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cells = Vec::new();
    for (label, out) in outcomes.into_iter().flatten() {
        if let Some(t) = out.profile_tokens {
            sizes.entry(label).or_default().push(t as f64);
        }
        cells.push(out);
    }
    let (records, growth) = merge(cells);
    let labels: Vec<String> = c.variants.iter().map(ConsolidatorSpec::label).collect();
    let notes = vec![format!("variants: {}", labels.join(", "))];
    let report = Report {
        meta: meta(env, "Consolidation strategy comparison", seeds_of(&records), notes),
        variants: summarize_variants(&records, &sizes),
        ..Report::default()
    };
    Ok(RunOutput { records, growth, report })
}

fn cost(env: &Env) -> Result<RunOutput, RunError> {
    let c = &env.config;
    let a = &c.cost;
    let pricing = &c.pricing;
    let mut scales = c.scales.clone();
    scales.sort_unstable();
    scales.dedup();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &scale in &scales {
        let mut totals = [Money::ZERO; 2];
        for (slot, arch) in [Architecture::DualProcess, Architecture::FullContext].into_iter().enumerate() {
            let cell = Cell {
                architecture: arch,
                scale,
                seed: 0,
            };
            let mut per_kind: BTreeMap<(u8, &str), Vec<_>> = BTreeMap::new();
            for i in 1..=scale {
                for (kind, model, call) in a.calls_at(arch, i) {
                    let k = u8::from(kind == CallKind::Consolidation);
                    per_kind.entry((k, model)).or_default().push(call);
                }
            }
            let mut arch_records = Vec::new();
            for ((k, model), calls) in per_kind {
                let kind = if k == 1 { CallKind::Consolidation } else { CallKind::Inference };
                arch_records.extend(aggregate(env, cell, kind, model, &calls)?);
            }
            totals[slot] = run_cost(&arch_records, pricing)?;
            records.extend(arch_records);
        }
        let fixed = a.preamble_tokens + a.query_tokens;
        rows.push(CostRow {
            scale,
            dual_process: totals[0],
            full_context: totals[1],
            dual_process_per_message: Money(totals[0].0 / scale),
            full_context_over_limit: fixed + a.fc_history_tokens(scale) > env.chat.hard_limit(),
        });
    }
    let horizon = scales.last().copied().unwrap_or(0);
    let dp = a.per_message_costs(Architecture::DualProcess, horizon, pricing)?;
    let fc = a.per_message_costs(Architecture::FullContext, horizon, pricing)?;
    let crossover = crate::evaluation::crossover_point(&dp, &fc)?;
    let unit_prices = [INFERENCE_MODEL, CONSOLIDATION_MODEL]
        .iter()
        .map(|m| {
            let p = pricing.price(m)?;
            Ok((m.to_string(), p.input_per_million(), p.output_per_million()))
        })
        .collect::<Result<Vec<_>, crate::evaluation::CostError>>()?;
    let report = Report {
        meta: meta(env, "Cost model", vec![0], Vec::new()),
        cost: Some(CostSection {
            unit_prices,
            assumptions: a.describe(),
            rows,
            crossover,
        }),
        ..Report::default()
    };
    let growth = scales
        .iter()
        .map(|&scale| GrowthPoint {
            scale,
            seed: 0,
            messages: scale,
            profile_tokens: (a.profile_slope * scale as f64 + a.profile_intercept).round() as u64,
        })
        .collect();
    Ok(RunOutput { records, growth, report })
}
