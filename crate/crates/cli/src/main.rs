mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csmg_core::analysis::DecayModel;
use csmg_core::{Family, ScanMode};

use crate::config::parse_count;
use crate::error::CliError;

/// Cluster-state machine gun simulator and passive entanglement-length analysis.
#[derive(Debug, Parser)]
#[command(name = "csmg", version, propagate_version = true)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a click record and write it in the binary record format.
    Simulate(SimulateArgs),
    /// Count template instances in a record and write correlator estimates.
    Scan(ScanArgs),
    /// Bound the entanglement length from correlator estimates.
    Analyze(AnalyzeArgs),
    /// Direct-reach and naive-tomography planning table.
    Plan(PlanArgs),
    /// Check every template against the stabilizer engine.
    Verify(VerifyArgs),
    /// Write the planning and extrapolation curves.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Joint collection and detection probability.
    #[arg(long)]
    pd: Option<f64>,
    /// Per-photon single-Pauli error probability.
    #[arg(long)]
    psigma: Option<f64>,
    /// Per-bond ZZ error probability.
    #[arg(long)]
    pzz: Option<f64>,
    #[arg(long)]
    qx: Option<f64>,
    #[arg(long)]
    qy: Option<f64>,
    #[arg(long)]
    qz: Option<f64>,
    /// Number of photons, e.g. 1000000 or 1e6.
    #[arg(long, value_parser = parse_count)]
    photons: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<u64>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Largest separation; all l = 2, 5, 8, ... up to it are used.
    #[arg(long)]
    lmax: Option<u32>,
    /// Comma-separated families, e.g. gamma1,gamma2.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    /// overlapping or non-overlapping.
    #[arg(long)]
    mode: Option<ScanMode>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Output record file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Record file to scan.
    record: Option<PathBuf>,
    #[command(flatten)]
    selection: SelectionArgs,
    /// Override the burn-in stored in the record header.
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<u64>,
    /// Load the record and scan it in parallel chunks of this many offsets.
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Estimates CSV; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Estimates CSV written by `scan`.
    estimates: Option<PathBuf>,
    /// Largest separation for the extrapolated bounds.
    #[arg(long)]
    lmax: Option<u32>,
    /// Decay law used for the error-model fit.
    #[arg(long, default_value = "exact")]
    model: DecayModel,
    /// Output directory for bounds.csv and fit.json; tables go to standard
    /// output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    pd: Option<f64>,
    /// Photon budget; defaults to the measurement time over the emission period.
    #[arg(long, value_parser = parse_count)]
    photons: Option<u64>,
    /// Measurement time in seconds.
    #[arg(long, default_value_t = 10.0)]
    time: f64,
    /// Expected instances required at the reported length.
    #[arg(long, default_value_t = 1.0)]
    min_instances: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    lmax: u32,
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    /// Noiseless instances simulated per template.
    #[arg(long, default_value_t = csmg_core::template::DEFAULT_VERIFY_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_count)]
    photons: Option<u64>,
    #[arg(long, default_value_t = 10.0)]
    time: f64,
    #[arg(long, default_value_t = 1.0)]
    min_instances: f64,
    /// Comma-separated single-Pauli rates for the entanglement-length curves.
    #[arg(long, default_value = "0,0.002", value_delimiter = ',')]
    psigma: Vec<f64>,
    #[arg(long, default_value = "asymptotic")]
    model: DecayModel,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CSMG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CSMG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(error::usage)
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => config::RunConfig::load(p)?,
        None => config::RunConfig::default(),
    };
    match cli.command {
        Command::Simulate(a) => commands::simulate(cfg, a),
        Command::Scan(a) => commands::scan(cfg, a),
        Command::Analyze(a) => commands::analyze(cfg, a),
        Command::Plan(a) => commands::plan(cfg, a),
        Command::Verify(a) => commands::verify(cfg, a),
        Command::Report(a) => commands::report(cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csmg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
