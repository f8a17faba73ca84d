//! `islander`: intentional-islanding planning for transmission grids.
//!
//! Subcommands: `plan` (full pipeline to a plan plus artifacts),
//! `eigengap` (per-layer and unified eigengap tables), `coherency`
//! (coherency matrix and layer from measurements), `simulate` (synthetic
//! swing dynamics to a measurement CSV), `score` (re-score an existing
//! plan). Exit codes: 0 success, 1 input or computation error, 2
//! infeasible request.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

use islander_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("{0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            // Structurally impossible requests (island count or embedding
            // dimension out of range) exit 2; everything else exits 1.
            CliError::Core(CoreError::InfeasibleK { .. })
            | CliError::Core(CoreError::EmbeddingDim { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "islander", version, about = "Spectral intentional-islanding planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an islanding plan and write all artifacts.
    Plan(PlanArgs),
    /// Emit per-layer and unified eigengap tables as CSV.
    Eigengap(EigengapArgs),
    /// Compute the coherency matrix and layer from measurements.
    Coherency(CoherencyArgs),
    /// Generate synthetic post-disturbance measurements.
    Simulate(SimulateArgs),
    /// Re-score an existing plan against the electrical layers.
    Score(ScoreArgs),
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Case file (JSON).
    #[arg(long)]
    case: Option<PathBuf>,

    /// Measurement CSV (required when the coherency layer is enabled).
    #[arg(long)]
    measurements: Option<PathBuf>,

    /// Line to outage before planning, as FROM:TO bus labels. Repeatable.
    #[arg(long = "outage", value_name = "FROM:TO")]
    outages: Vec<String>,

    /// Comma-separated layer subset
    /// (topology,admittance,power_flow,frequency_coherency).
    #[arg(long, value_delimiter = ',')]
    layers: Vec<String>,

    /// Subspace-fusion trade-off weight.
    #[arg(long)]
    alpha: Option<f64>,

    /// Embedding dimension K (omit to select by eigengap).
    #[arg(short = 'k', long = "k")]
    k: Option<usize>,

    /// Number of islands (omit to follow K).
    #[arg(long)]
    islands: Option<usize>,

    /// Coherency layer support: edge_restricted or dense.
    #[arg(long)]
    coherency_mode: Option<String>,

    /// Negative-coherency handling: clamp or shift.
    #[arg(long)]
    negative_cc: Option<String>,

    /// Drop measurement samples before this time (seconds).
    #[arg(long)]
    window_start: Option<f64>,

    /// Disturbance time (seconds); with --idle it derives the window start.
    #[arg(long)]
    event_time: Option<f64>,

    /// Idle/response time after the disturbance (seconds).
    #[arg(long)]
    idle: Option<f64>,

    /// Conductance definition: standard or paper_literal.
    #[arg(long)]
    conductance_mode: Option<String>,

    /// Gap parameter for the K-independent bound report, in (0, 1/3).
    #[arg(long)]
    delta: Option<f64>,

    /// Renormalize embedding rows before clustering.
    #[arg(long)]
    row_normalize: bool,

    /// Also write each layer as a dense CSV matrix.
    #[arg(long)]
    export_layers: bool,

    /// Load a previously written resolved-config.json instead of flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Output directory for the artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EigengapArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Output directory for eigengaps.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoherencyArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Output directory for coherency_matrix.csv and coherency_layer.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Case file (JSON).
    #[arg(long)]
    case: PathBuf,

    /// Line to open at the event time, as FROM:TO bus labels. Repeatable.
    #[arg(long = "outage", value_name = "FROM:TO")]
    outages: Vec<String>,

    /// Integration step, seconds.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,

    /// Simulated horizon, seconds.
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,

    /// Event time, seconds.
    #[arg(long, default_value_t = 2.0)]
    event_time: f64,

    /// Idle/response window recorded after the event, seconds.
    #[arg(long, default_value_t = 0.5)]
    idle: f64,

    /// Inertia for generator buses.
    #[arg(long, default_value_t = islander_core::dynamics::DEFAULT_GENERATOR_INERTIA)]
    gen_inertia: f64,

    /// Inertia for load buses.
    #[arg(long, default_value_t = islander_core::dynamics::DEFAULT_LOAD_INERTIA)]
    load_inertia: f64,

    /// Uniform damping.
    #[arg(long, default_value_t = islander_core::dynamics::DEFAULT_DAMPING)]
    damping: f64,

    /// Per-bus inertia override, as LABEL=VALUE. Repeatable (use a low
    /// value to mimic a converter-dominated wind plant).
    #[arg(long = "inertia", value_name = "LABEL=VALUE")]
    inertia_overrides: Vec<String>,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// plan.json produced by `plan`.
    #[arg(long)]
    plan: PathBuf,

    /// Optional output directory for quality.txt and quality.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(args) => commands::cmd_plan(args),
        Command::Eigengap(args) => commands::cmd_eigengap(args),
        Command::Coherency(args) => commands::cmd_coherency(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Score(args) => commands::cmd_score(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
