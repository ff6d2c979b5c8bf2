//! Scoring, aggregation, cost accounting, and reports.

mod cost;
mod growth;
mod matcher;
mod records;
mod report;
mod summary;

pub use cost::{
    crossover_point, run_cost, CostAssumptions, CostError, ModelPrice, Money, PricingTable, CONSOLIDATION_MODEL,
    INFERENCE_MODEL,
};
pub use growth::{fit_growth_law, FitError, GrowthFit};
pub use matcher::{match_all, match_answer, normalize};
pub use records::{Architecture, BenchmarkRecord, CallKind, Cell};
pub use report::{emit_report, CostRow, CostSection, Report, ReportFormat, ReportMeta, SIMULATED_LATENCY_BANNER};
pub use summary::{
    accuracy_interval, mean_sd, summarize_by_type, summarize_placements, summarize_variants, summarize_scale, summarize_scales,
    ArchSummary, ScaleSummary, TypeSummary, VariantSummary, CI_METHOD,
};
