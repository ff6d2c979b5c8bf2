//! Benchmark sweeps: configuration, execution, and results directories.
//!
//! A results directory holds `config.snapshot`, `records.ldj`, `report.md`,
//! and `growth.series`. Rerunning the snapshot with scripted backends
//! reproduces all four byte for byte.

mod cells;
mod commands;
mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::evaluation::{emit_report, BenchmarkRecord, CostError, Report, ReportFormat};
use crate::persistence::{encode, write_atomic, ObjectKind, PersistError, Provenance};
use crate::simulation::GenerationError;

pub use config::{
    Command, ConsolidatorSpec, RunConfig, DEFAULT_EMBEDDING_DIM, DEFAULT_PREAMBLE, EVALUATION_CADENCE,
};

pub const CONFIG_FILE: &str = "config.snapshot";
pub const RECORDS_FILE: &str = "records.ldj";
pub const REPORT_FILE: &str = "report.md";
pub const GROWTH_FILE: &str = "growth.series";

pub const RESULT_FILES: [&str; 4] = [CONFIG_FILE, RECORDS_FILE, REPORT_FILE, GROWTH_FILE];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error("run step failed: {0}")]
    Step(String),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for backend errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Backend(_) => 2,
            _ => 1,
        }
    }
}

/// One point of a DP profile-growth series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub scale: u64,
    pub seed: u64,
    pub messages: u64,
    pub profile_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<BenchmarkRecord>,
    pub growth: Vec<GrowthPoint>,
    pub report: Report,
}

impl RunOutput {
    pub fn records_text(&self, config: &RunConfig) -> String {
        let provenance = Provenance {
            spec_hash: config.spec_hash(),
            seed: config.seed,
        };
        encode(ObjectKind::Results, &provenance, &self.records)
    }

    pub fn report_text(&self) -> String {
        emit_report(&self.report, ReportFormat::Markdown)
    }

    pub fn growth_text(&self) -> String {
        let mut out = String::from("scale\tseed\tmessages\tprofile_tokens\n");
        for p in &self.growth {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", p.scale, p.seed, p.messages, p.profile_tokens);
        }
        out
    }
}

/// Executes `config` without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    commands::dispatch(config)
}

/// Executes `config` and writes its results directory under `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutput, RunError> {
    let output = execute(config)?;
    write_results(config, &output, out)?;
    Ok(output)
}

pub fn write_results(config: &RunConfig, output: &RunOutput, out: &Path) -> Result<(), RunError> {
    fs::create_dir_all(out).map_err(|e| RunError::Config(format!("cannot create {}: {e}", out.display())))?;
    write_atomic(&out.join(CONFIG_FILE), config.snapshot().as_bytes())?;
    write_atomic(&out.join(RECORDS_FILE), output.records_text(config).as_bytes())?;
    write_atomic(&out.join(REPORT_FILE), output.report_text().as_bytes())?;
    write_atomic(&out.join(GROWTH_FILE), output.growth_text().as_bytes())?;
    Ok(())
}

pub fn load_snapshot(dir: &Path) -> Result<RunConfig, RunError> {
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_snapshot(&text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayCheck {
    pub source: PathBuf,
    pub target: PathBuf,
    /// Result files whose bytes differ between source and target.
    pub mismatched: Vec<String>,
}

impl ReplayCheck {
    pub fn identical(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Reruns the snapshot in `source` into `target` and compares every result
/// file byte for byte.
pub fn replay(source: &Path, target: &Path) -> Result<ReplayCheck, RunError> {
    let config = load_snapshot(source)?;
    run(&config, target)?;
    let mut mismatched = Vec::new();
    for name in RESULT_FILES {
        let a = fs::read(source.join(name));
        let b = fs::read(target.join(name));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => mismatched.push(name.to_string()),
        }
    }
    Ok(ReplayCheck {
        source: source.to_path_buf(),
        target: target.to_path_buf(),
        mismatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Config("x".into()).exit_code(), 1);
        assert_eq!(RunError::Backend(BackendError::Transport("down".into())).exit_code(), 2);
    }

    #[test]
    fn growth_text_is_tab_separated() {
        let out = RunOutput {
            records: Vec::new(),
            growth: vec![GrowthPoint {
                scale: 100,
                seed: 3,
                messages: 20,
                profile_tokens: 57,
            }],
            report: Report::default(),
        };
        assert_eq!(out.growth_text(), "scale\tseed\tmessages\tprofile_tokens\n100\t3\t20\t57\n");
    }
}
