//! Command-line front end for the dual-rail memory simulator.
//!
//! Exit codes separate the failure families so scripts can react without
//! parsing stderr: 0 success, 2 configuration or parameter validation,
//! 3 calibration could not reach its target, 4 a sampled scenario was asked
//! to run with zero trials, 1 anything else (I/O, fit breakdown).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entmem::config::{ExperimentConfig, Fidelity};
use entmem::scenario::{run_calibration, run_scenario, RunOutput, Scenario};
use entmem::Error;

#[derive(Parser)]
#[command(
    name = "entmem",
    version,
    about = "Simulates storage and retrieval of dual-rail single-photon entanglement in an atomic memory"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Settings file (TOML); built-in defaults when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed override for every sampled quantity
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory override
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Whether counting statistics are exact or Monte Carlo sampled
    #[arg(long, global = true, value_enum, value_name = "MODE")]
    fidelity: Option<FidelityArg>,
}

#[derive(Copy, Clone, ValueEnum)]
enum FidelityArg {
    Analytic,
    Sampled,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::Analytic => Fidelity::Analytic,
            FidelityArg::Sampled => Fidelity::Sampled,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum StageArg {
    In,
    Out,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the pulse propagation and write the time-resolved curves
    #[command(name = "simulate-eit")]
    SimulateEit,

    /// Scan the analyzer phase at one stage and fit the fringe
    #[command(name = "fringe")]
    Fringe {
        /// Which side of the memory to probe
        #[arg(long, value_enum)]
        stage: StageArg,
    },

    /// Detection-pattern table for both stages next to the benchmark rows
    #[command(name = "table1")]
    Table1,

    /// Everything: storage curves, both fringes, the table, summary text
    #[command(name = "report")]
    Report,

    /// Find the control power that hits the target retrieval efficiency
    #[command(name = "calibrate")]
    Calibrate,
}

fn run(cli: Cli) -> Result<RunOutput, Error> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(out) = &cli.common.out {
        cfg.run.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(f) = cli.common.fidelity {
        cfg.run.fidelity = f.into();
    }
    cfg.validate()?;

    match cli.command {
        Command::SimulateEit => run_scenario(&cfg, Scenario::Fig2),
        Command::Fringe { stage: StageArg::In } => run_scenario(&cfg, Scenario::FringeIn),
        Command::Fringe { stage: StageArg::Out } => run_scenario(&cfg, Scenario::FringeOut),
        Command::Table1 => run_scenario(&cfg, Scenario::Table1),
        Command::Report => run_scenario(&cfg, Scenario::FullReport),
        Command::Calibrate => run_calibration(&cfg).map(|(output, _)| output),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidState(_) | Error::Grid(_) => 2,
        Error::Calibration(_) => 3,
        Error::InsufficientData(_) => 4,
        Error::Fit(_) | Error::Io(_) => 1,
    }
}

/// Prints one line, treating a closed pipe as a normal end of output.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{text}").is_err() {
        std::process::exit(0);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            emit(&output.summary);
            for file in &output.files {
                emit(&format!("wrote {}", file.display()));
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
