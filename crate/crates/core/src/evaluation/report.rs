//! Deterministic markdown and line-record rendering of run summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::cost::Money;
use super::growth::GrowthFit;
use super::records::Architecture;
use super::summary::{ArchSummary, ScaleSummary, TypeSummary, VariantSummary, CI_METHOD};

pub const SIMULATED_LATENCY_BANNER: &str =
    "SIMULATED LATENCY: scripted backends were used; latencies come from a fixed latency model, not from a live service.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    LineRecords,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub title: String,
    pub spec_hash: String,
    pub seeds: Vec<u64>,
    pub backend_kind: String,
    pub simulated_latency: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub scale: u64,
    pub dual_process: Money,
    pub full_context: Money,
    pub dual_process_per_message: Money,
    /// The untruncated history would exceed the hard model limit.
    pub full_context_over_limit: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSection {
    pub unit_prices: Vec<(String, f64, f64)>,
    pub assumptions: Vec<String>,
    pub rows: Vec<CostRow>,
    pub crossover: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub scales: Vec<ScaleSummary>,
    pub placements: Vec<ScaleSummary>,
    pub by_type: Vec<TypeSummary>,
    pub variants: Vec<VariantSummary>,
    pub growth: Option<GrowthFit>,
    pub cost: Option<CostSection>,
}

impl Report {
    /// Copy with every table in canonical order: scale, then architecture,
    /// then placement or query type.
    fn canonical(&self) -> Report {
        let mut r = self.clone();
        let key = |a: &ArchSummary| (a.architecture, a.placement.clone());
        for s in r.scales.iter_mut().chain(r.placements.iter_mut()) {
            s.rows.sort_by_key(key);
        }
        r.scales.sort_by_key(|s| s.scale);
        r.placements.sort_by_key(|s| s.scale);
        r.by_type.sort_by_key(|t| (t.architecture, t.query_type));
        r.variants.sort_by(|a, b| a.variant.cmp(&b.variant));
        r.meta.seeds.sort_unstable();
        r.meta.seeds.dedup();
        if let Some(c) = r.cost.as_mut() {
            c.rows.sort_by_key(|row| row.scale);
        }
        r
    }
}

pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    let r = report.canonical();
    match format {
        ReportFormat::Markdown => markdown(&r),
        ReportFormat::LineRecords => line_records(&r),
    }
}

fn summary_cells(a: &ArchSummary) -> String {
    format!(
        "{} | {} | {:.0} | {:.0} ± {:.0}",
        a.n,
        a.accuracy_cell(),
        a.mean_latency_ms,
        a.tokens_mean,
        a.tokens_sd
    )
}

fn markdown(r: &Report) -> String {
    let mut out = String::new();
    let m = &r.meta;
    let title = if m.title.is_empty() { "Benchmark report" } else { &m.title };
    let seeds: Vec<String> = m.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "# {title}\n");
    let _ = writeln!(out, "- spec hash: `{}`", m.spec_hash);
    let _ = writeln!(out, "- seeds: {}", seeds.join(", "));
    let _ = writeln!(out, "- backend: {}", m.backend_kind);
    let _ = writeln!(out, "- accuracy interval: {CI_METHOD}");
    for n in &m.notes {
        let _ = writeln!(out, "- {n}");
    }
    if m.simulated_latency {
        let _ = writeln!(out, "\n> {SIMULATED_LATENCY_BANNER}");
    }

    if !r.scales.is_empty() {
        let _ = writeln!(out, "\n## Accuracy by scale\n");
        let _ = writeln!(
            out,
            "| Scale | Architecture | n | Accuracy | Mean latency (ms) | Input tokens (mean ± SD) |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for s in &r.scales {
            for a in &s.rows {
                let _ = writeln!(out, "| {} | {} | {} |", s.scale, a.architecture.short(), summary_cells(a));
            }
        }
    }

    if !r.placements.is_empty() {
        let _ = writeln!(out, "\n## Accuracy by placement\n");
        let _ = writeln!(
            out,
            "| Scale | Architecture | Placement | n | Accuracy | Mean latency (ms) | Input tokens (mean ± SD) |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for s in &r.placements {
            for a in &s.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    s.scale,
                    a.architecture.short(),
                    a.placement.as_deref().unwrap_or("-"),
                    summary_cells(a)
                );
            }
        }
    }

    if !r.by_type.is_empty() {
        let mut archs: Vec<Architecture> = r.by_type.iter().map(|t| t.architecture).collect();
        archs.dedup();
        let mut types: Vec<_> = r.by_type.iter().map(|t| t.query_type).collect();
        types.sort();
        types.dedup();
        let _ = writeln!(out, "\n## Accuracy by query type\n");
        let head: Vec<&str> = archs.iter().map(|a| a.short()).collect();
        let _ = writeln!(out, "| Query type | n | {} |", head.join(" | "));
        let _ = writeln!(out, "|---|---|{}", "---|".repeat(archs.len()));
        for t in types {
            let cells: Vec<String> = archs
                .iter()
                .map(|a| {
                    r.by_type
                        .iter()
                        .find(|s| s.architecture == *a && s.query_type == t)
                        .map_or("-".to_string(), |s| format!("{:.0}% ({}/{})", 100.0 * s.accuracy, s.matched, s.n))
                })
                .collect();
            let n = r.by_type.iter().find(|s| s.query_type == t).map_or(0, |s| s.n);
            let _ = writeln!(out, "| {} | {} | {} |", t.label(), n, cells.join(" | "));
        }
    }

    if !r.variants.is_empty() {
        let _ = writeln!(out, "\n## Consolidation variants\n");
        let _ = writeln!(
            out,
            "| Variant | n | Accuracy | Mean latency (ms) | Input tokens (mean ± SD) | Profile tokens (mean) |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for v in &r.variants {
            let _ = writeln!(out, "| {} | {} | {:.0} |", v.variant, summary_cells(&v.summary), v.profile_tokens_mean);
        }
    }

    if let Some(g) = &r.growth {
        let _ = writeln!(out, "\n## Profile growth\n");
        let r2 = g.r_squared.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "y = {:.3}x + {:.1} (R² = {r2}, {} points)",
            g.slope, g.intercept, g.points
        );
    }

    if let Some(c) = &r.cost {
        let _ = writeln!(out, "\n## Cost\n");
        let _ = writeln!(out, "| Model | Input $/1M | Output $/1M |\n|---|---|---|");
        for (model, i, o) in &c.unit_prices {
            let _ = writeln!(out, "| {model} | {i:.2} | {o:.2} |");
        }
        let _ = writeln!(out, "\nAssumptions:\n");
        for a in &c.assumptions {
            let _ = writeln!(out, "- {a}");
        }
        let _ = writeln!(out, "\n| Messages | DP total | DP per message | FC total |\n|---|---|---|---|");
        for row in &c.rows {
            let fc = if row.full_context_over_limit {
                format!("{} (untruncated history over hard limit)", row.full_context)
            } else {
                row.full_context.to_string()
            };
            let _ = writeln!(
                out,
                "| {} | {} | ${:.4} | {fc} |",
                row.scale,
                row.dual_process,
                row.dual_process_per_message.dollars()
            );
        }
        let cross = c.crossover.map_or("none".to_string(), |t| format!("T = {t}"));
        let _ = writeln!(out, "\nCrossover (cumulative DP below FC): {cross}");
    }
    out
}

fn tagged<T: Serialize>(tag: &str, value: &T, extra: &[(&str, Value)]) -> String {
    let mut v = serde_json::to_value(value).expect("serializable");
    if let Value::Object(map) = &mut v {
        map.insert("record".into(), Value::String(tag.into()));
        for (k, x) in extra {
            map.insert((*k).into(), x.clone());
        }
    }
    v.to_string()
}

fn line_records(r: &Report) -> String {
    let mut lines = vec![tagged("meta", &r.meta, &[("ci_method", json!(CI_METHOD))])];
    for (tag, group) in [("scale", &r.scales), ("placement", &r.placements)] {
        for s in group {
            for a in &s.rows {
                lines.push(tagged(tag, a, &[("scale", json!(s.scale))]));
            }
        }
    }
    for t in &r.by_type {
        lines.push(tagged("query_type", t, &[]));
    }
    for v in &r.variants {
        lines.push(tagged("variant", v, &[]));
    }
    if let Some(g) = &r.growth {
        lines.push(tagged("growth", g, &[]));
    }
    if let Some(c) = &r.cost {
        lines.push(tagged("cost", c, &[]));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
