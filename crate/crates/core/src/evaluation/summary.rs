//! Aggregation of probe records into per-scale, per-placement, and
//! per-query-type summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::records::{Architecture, BenchmarkRecord};
use crate::backends::CallOutcome;
use crate::simulation::QueryType;

/// Two-sided 95% interval for a match rate: t(n-1, 0.975) * s / sqrt(n),
/// with s the sample standard deviation of the 0/1 outcomes.
pub fn accuracy_interval(matched: usize, n: usize) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let p = matched as f64 / nf;
    let sd = (p * (1.0 - p) * nf / (nf - 1.0)).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).ok()?.inverse_cdf(0.975);
    Some(t * sd / nf.sqrt())
}

pub const CI_METHOD: &str =
    "95% CI = t(n-1, 0.975) * s / sqrt(n), s the sample SD of per-probe 0/1 outcomes, clamped to [0, 100%]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSummary {
    pub architecture: Architecture,
    pub placement: Option<String>,
    pub n: usize,
    pub matched: usize,
    pub accuracy: f64,
    pub ci_half_width: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_latency_ms: f64,
    pub tokens_mean: f64,
    pub tokens_sd: f64,
    pub overflows: usize,
    pub crashed: bool,
}

impl ArchSummary {
    pub fn from_records(architecture: Architecture, placement: Option<String>, records: &[&BenchmarkRecord]) -> Self {
        let n = records.len();
        let matched = records.iter().filter(|r| r.matched).count();
        let accuracy = if n == 0 { 0.0 } else { matched as f64 / n as f64 };
        let half = accuracy_interval(matched, n);
        let h = half.unwrap_or(0.0);
        let overflows = records.iter().filter(|r| r.outcome == CallOutcome::Overflow).count();
        let tokens: Vec<f64> = records.iter().map(|r| r.input_tokens as f64).collect();
        let (tokens_mean, tokens_sd) = mean_sd(&tokens);
        let latencies: Vec<f64> = records
            .iter()
            .filter(|r| r.outcome == CallOutcome::Ok)
            .map(|r| r.latency_ms)
            .collect();
        Self {
            architecture,
            placement,
            n,
            matched,
            accuracy,
            ci_half_width: half,
            ci_low: (accuracy - h).clamp(0.0, 1.0),
            ci_high: (accuracy + h).clamp(0.0, 1.0),
            mean_latency_ms: mean_sd(&latencies).0,
            tokens_mean,
            tokens_sd,
            overflows,
            crashed: overflows > 0,
        }
    }

    /// "85.0% ± 17.1%", or "0.0% (Crash)" when any probe overflowed.
    pub fn accuracy_cell(&self) -> String {
        let pct = format!("{:.1}%", 100.0 * self.accuracy);
        if self.crashed {
            format!("{pct} (Crash)")
        } else {
            match self.ci_half_width {
                Some(h) => format!("{pct} ± {:.1}%", 100.0 * h),
                None => pct,
            }
        }
    }
}

/// Mean and sample standard deviation; zero for fewer than two values.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub scale: u64,
    pub rows: Vec<ArchSummary>,
}

impl ScaleSummary {
    pub fn row(&self, architecture: Architecture) -> Option<&ArchSummary> {
        self.rows
            .iter()
            .find(|r| r.architecture == architecture && r.placement.is_none())
    }
}

fn probes_at(records: &[BenchmarkRecord], scale: u64) -> impl Iterator<Item = &BenchmarkRecord> {
    records.iter().filter(move |r| r.is_probe() && r.scale == scale)
}

/// Per-architecture summary of the probes at `scale`.
pub fn summarize_scale(scale: u64, records: &[BenchmarkRecord]) -> ScaleSummary {
    let mut by_arch: BTreeMap<Architecture, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in probes_at(records, scale) {
        by_arch.entry(r.architecture).or_default().push(r);
    }
    ScaleSummary {
        scale,
        rows: by_arch
            .into_iter()
            .map(|(a, rs)| ArchSummary::from_records(a, None, &rs))
            .collect(),
    }
}

fn scales(records: &[BenchmarkRecord]) -> Vec<u64> {
    let mut s: Vec<u64> = records.iter().filter(|r| r.is_probe()).map(|r| r.scale).collect();
    s.sort_unstable();
    s.dedup();
    s
}

pub fn summarize_scales(records: &[BenchmarkRecord]) -> Vec<ScaleSummary> {
    scales(records).into_iter().map(|s| summarize_scale(s, records)).collect()
}

/// Like [`summarize_scales`], with one row per architecture and placement.
pub fn summarize_placements(records: &[BenchmarkRecord]) -> Vec<ScaleSummary> {
    scales(records)
        .into_iter()
        .map(|scale| {
            let mut groups: BTreeMap<(Architecture, String), Vec<&BenchmarkRecord>> = BTreeMap::new();
            for r in probes_at(records, scale) {
                let p = r.placement.clone().unwrap_or_default();
                groups.entry((r.architecture, p)).or_default().push(r);
            }
            ScaleSummary {
                scale,
                rows: groups
                    .into_iter()
                    .map(|((a, p), rs)| ArchSummary::from_records(a, Some(p), &rs))
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub summary: ArchSummary,
    /// Mean final profile size across the variant's conversations.
    pub profile_tokens_mean: f64,
}

/// One summary per consolidator variant, in label order. `profile_tokens`
/// maps each variant to the final profile sizes of its conversations.
pub fn summarize_variants(
    records: &[BenchmarkRecord],
    profile_tokens: &BTreeMap<String, Vec<f64>>,
) -> Vec<VariantSummary> {
    let mut groups: BTreeMap<String, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_probe()) {
        if let Some(v) = &r.variant {
            groups.entry(v.clone()).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .map(|(variant, rs)| {
            let arch = rs[0].architecture;
            let sizes = profile_tokens.get(&variant).map_or(&[][..], Vec::as_slice);
            VariantSummary {
                summary: ArchSummary::from_records(arch, None, &rs),
                profile_tokens_mean: mean_sd(sizes).0,
                variant,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub architecture: Architecture,
    pub query_type: QueryType,
    pub n: usize,
    pub matched: usize,
    pub accuracy: f64,
}

/// Accuracy per architecture and query type, ordered by both.
pub fn summarize_by_type(records: &[BenchmarkRecord]) -> Vec<TypeSummary> {
    let mut groups: BTreeMap<(Architecture, QueryType), (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_probe()) {
        if let Some(t) = r.query_type {
            let g = groups.entry((r.architecture, t)).or_default();
            g.0 += 1;
            g.1 += usize::from(r.matched);
        }
    }
    groups
        .into_iter()
        .map(|((architecture, query_type), (n, matched))| TypeSummary {
            architecture,
            query_type,
            n,
            matched,
            accuracy: matched as f64 / n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::CallRecord;
    use crate::evaluation::cost::PricingTable;
    use crate::evaluation::records::Cell;
    use crate::simulation::QueryCase;

    fn records(arch: Architecture, scale: u64, matched: usize, n: usize, outcome: CallOutcome) -> Vec<BenchmarkRecord> {
        let case = QueryCase {
            query_type: QueryType::RecentState,
            question: "q".into(),
            expected_parts: vec!["0.001".into()],
            keys: vec!["p".into()],
            supporting_indices: vec![],
            unique: false,
        };
        (0..n)
            .map(|i| {
                let call = CallRecord {
                    input_tokens: 100 + i as u64,
                    output_tokens: 5,
                    latency_ms: 600.0,
                    simulated: true,
                    outcome,
                };
                let answer = if i < matched { "0.001" } else { "UNKNOWN" };
                let cell = Cell {
                    architecture: arch,
                    scale,
                    seed: i as u64,
                };
                BenchmarkRecord::probe(cell, &case, "gpt-4o", Some(answer), &call, &PricingTable::default()).unwrap()
            })
            .collect()
    }

    #[test]
    fn seventeen_of_twenty() {
        let s = summarize_scale(10_000, &records(Architecture::DualProcess, 10_000, 17, 20, CallOutcome::Ok));
        let row = s.row(Architecture::DualProcess).unwrap();
        assert_eq!(row.accuracy, 0.85);
        assert_eq!(row.accuracy_cell(), "85.0% ± 17.1%");
    }

    #[test]
    fn fifteen_of_twenty_interval() {
        // Independent check: s = sqrt(0.75*0.25*20/19), t(19, .975) = 2.093024.
        let s = (0.75f64 * 0.25 * 20.0 / 19.0).sqrt();
        let expected = 2.093_024 * s / 20f64.sqrt();
        let got = accuracy_interval(15, 20).unwrap();
        assert!((got - expected).abs() < 1e-5, "{got} {expected}");
        assert!((got - 0.208).abs() < 5e-4);
    }

    #[test]
    fn all_overflow_is_a_crash() {
        let s = summarize_scale(15_000, &records(Architecture::FullContext, 15_000, 20, 20, CallOutcome::Overflow));
        let row = s.row(Architecture::FullContext).unwrap();
        assert!(row.crashed);
        assert_eq!(row.accuracy_cell(), "0.0% (Crash)");
    }

    #[test]
    fn perfect_score_clamps() {
        let s = summarize_scale(100, &records(Architecture::Rag, 100, 20, 20, CallOutcome::Ok));
        let row = s.row(Architecture::Rag).unwrap();
        assert_eq!((row.ci_low, row.ci_high), (1.0, 1.0));
        assert_eq!(accuracy_interval(1, 1), None);
    }

    #[test]
    fn rows_are_ordered_by_architecture() {
        let mut rs = records(Architecture::FullContext, 100, 1, 2, CallOutcome::Ok);
        rs.extend(records(Architecture::DualProcess, 100, 2, 2, CallOutcome::Ok));
        let s = summarize_scale(100, &rs);
        let order: Vec<_> = s.rows.iter().map(|r| r.architecture).collect();
        assert_eq!(order, vec![Architecture::DualProcess, Architecture::FullContext]);
        assert_eq!(mean_sd(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    }
}
