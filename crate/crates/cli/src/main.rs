use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualmem::backends::{ChatBackendSpec, EmbeddingBackendSpec};
use dualmem::evaluation::Architecture;
use dualmem::runner::{self, Command, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "dualmem", version, about = "Benchmark runner for dual-process conversational memory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Planted-fact recall across scales and placements (DP vs FC).
    Capacity(RunArgs),
    /// Realistic research conversations with crash semantics (DP, FC, optional RAG).
    Realistic(RunArgs),
    /// 120 generated queries, 20 per type (DP vs RAG).
    Honest120(RunArgs),
    /// Same workload under several consolidators.
    #[command(name = "consolidation-ablation", alias = "ablation")]
    Ablation(RunArgs),
    /// Modeled cost totals and the DP/FC crossover.
    Cost(RunArgs),
    /// Regenerate a results directory from its config snapshot and compare.
    Replay {
        /// Results directory holding config.snapshot.
        dir: PathBuf,
        /// Where to write the regenerated results.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    Dp,
    Rag,
    Fc,
}

impl From<Arch> for Architecture {
    fn from(a: Arch) -> Self {
        match a {
            Arch::Dp => Architecture::DualProcess,
            Arch::Rag => Architecture::Rag,
            Arch::Fc => Architecture::FullContext,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Scripted,
    Http,
}

#[derive(Args)]
struct RunArgs {
    /// Results directory.
    #[arg(long)]
    out: PathBuf,
    /// Start from a JSON config file instead of the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated conversation lengths.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u64>>,
    /// Seeds per scale.
    #[arg(long)]
    seeds: Option<usize>,
    /// Probes per seed.
    #[arg(long)]
    probes: Option<usize>,
    /// Architectures to run (repeat or comma-separate).
    #[arg(long, value_enum, value_delimiter = ',')]
    arch: Option<Vec<Arch>>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Chat endpoint for --backend http.
    #[arg(long)]
    endpoint: Option<String>,
    /// Chat model for --backend http.
    #[arg(long, default_value = "gpt-4o")]
    model: String,
    /// Embedding endpoint for --backend http; scripted embeddings otherwise.
    #[arg(long)]
    embedding_endpoint: Option<String>,
    #[arg(long, default_value = "text-embedding-3-small")]
    embedding_model: String,
    #[arg(long, default_value_t = 1536)]
    embedding_dim: usize,
    /// Agent turns between consolidations.
    #[arg(long)]
    cadence: Option<u64>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn build_config(command: Command, args: &RunArgs) -> Result<RunConfig, RunError> {
    let mut c = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut c = RunConfig::from_snapshot(&text)?;
            c.command = command;
            c
        }
        None => RunConfig::for_command(command),
    };
    if let Some(s) = &args.scales {
        c.scales = s.clone();
    }
    if let Some(n) = args.seeds {
        c.seeds_per_scale = n;
    }
    if let Some(n) = args.probes {
        c.probes_per_seed = n;
    }
    if let Some(a) = &args.arch {
        c.architectures = a.iter().map(|&x| x.into()).collect();
    }
    if let Some(n) = args.cadence {
        c.cadence = n;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if args.backend == Some(Backend::Http) {
        let endpoint = args
            .endpoint
            .clone()
            .ok_or_else(|| RunError::Config("--backend http needs --endpoint".into()))?;
        c.chat = ChatBackendSpec::http(endpoint, args.model.clone());
        c.inference_priced_as = None;
        if let Some(e) = &args.embedding_endpoint {
            c.embedding = EmbeddingBackendSpec {
                endpoint: Some(e.clone()),
                model: args.embedding_model.clone(),
                dim: args.embedding_dim,
                kind: c.chat.kind,
                ..c.embedding
            };
        }
    }
    Ok(c)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (command, args) = match cli.command {
        Cmd::Replay { dir, out } => {
            let check = runner::replay(&dir, &out)?;
            if check.identical() {
                println!("replay of {} is byte-identical", dir.display());
                return Ok(());
            }
            return Err(RunError::Step(format!(
                "replay differs in: {}",
                check.mismatched.join(", ")
            )));
        }
        Cmd::Capacity(a) => (Command::Capacity, a),
        Cmd::Realistic(a) => (Command::Realistic, a),
        Cmd::Honest120(a) => (Command::Honest120, a),
        Cmd::Ablation(a) => (Command::ConsolidationAblation, a),
        Cmd::Cost(a) => (Command::Cost, a),
    };
    let config = build_config(command, &args)?;
    let output = runner::run(&config, &args.out)?;
    log::info!("{} records written to {}", output.records.len(), args.out.display());
    print!("{}", output.report_text());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
