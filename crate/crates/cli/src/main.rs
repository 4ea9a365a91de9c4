//! `kcmfold`: run folding simulations, compare controllers and check the
//! numerical preconditions of a chain.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcmfold::KcmError;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "kcmfold", version, about = "Kinetostatic compliance folding of protein backbones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one folding simulation and write its trajectory and snapshots.
    Simulate(SimulateArgs),
    /// Run several controller variants from the same start and tabulate them.
    Compare(CompareArgs),
    /// Check LP feasibility, Lipschitz constants, the discretization error
    /// bound and the torque-gradient identity.
    Check(CheckArgs),
    /// Write the ideal backbone chain spec with the given number of planes.
    GenSpec(GenSpecArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Conventional,
    OdsQp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Chain-spec file; the bundled 10-plane backbone when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "KCMFOLD_OUT", default_value = "kcmfold-out")]
    pub out: PathBuf,
    /// Largest per-joint rotation per step, radians.
    #[arg(long, default_value_t = 0.04, allow_negative_numbers = true)]
    pub h: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 325)]
    pub iters: usize,
    /// Stop once the largest joint torque falls below this.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial angles: zero, uniform, uniform:MEAN:STD (degrees) or
    /// fixed:a,b,... (radians).
    #[arg(long, default_value = "uniform")]
    pub init: String,
    /// Record every n-th step.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Add per-step wall-clock columns (makes trajectories non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Disable stall detection.
    #[arg(long)]
    pub no_stall: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = Mode::Conventional)]
    pub mode: Mode,
    /// Bound scale: c_i = c0·rho/sqrt(2N).
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Same bound on every joint; overrides --rho.
    #[arg(long, allow_negative_numbers = true)]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Variants: conventional, ods:RHO or bound:C. Defaults to
    /// conventional, ods:20 and ods:9.
    #[arg(long = "variant")]
    pub variants: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.04, allow_negative_numbers = true)]
    pub h: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "uniform")]
    pub init: String,
    /// Refinement level m of the audit proxy (steps h/2^m).
    #[arg(long, default_value_t = 6)]
    pub refinements: u32,
    /// Audit horizon t*.
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    /// Peptide planes of the audit fixture.
    #[arg(long, default_value_t = 3)]
    pub audit_planes: usize,
    /// Samples of the Lipschitz probe.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GenSpecArgs {
    #[arg(long, default_value_t = 10)]
    pub planes: usize,
    /// Destination file.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<KcmError>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Check(a) => commands::check(&a),
        Command::GenSpec(a) => commands::gen_spec(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
