//! `qrs`: plan, simulate and cost quantum rejection sampling from the command line.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrs_core::Error;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "qrs", version, about = "Quantum rejection sampling: planning, simulation and resource estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choose the sampling dimension M, ratio bits and amplification rounds.
    Plan(PrepareArgs),
    /// Simulate the prepared state and report its distance to the exact target.
    Prepare(PrepareArgs),
    /// Build block-encoding models of a matrix and verify them densely.
    Blockencode(BlockArgs),
    /// Toffoli estimate for one register size.
    Estimate(EstimateArgs),
    /// Crossover against the LKS baseline and a cost sweep over N.
    Compare(CompareArgs),
    /// Success probability of the two-dimensional mesh ziggurat for increasing resolution.
    MeshDemo(MeshArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct PrepareArgs {
    /// Catalog name (powerlaw1d, powerlaw3d, gaussian, tanh, exponential, mesh2d) or a table file.
    #[arg(long)]
    pub target: String,
    /// Register qubits; the domain has N = 2^n points.
    #[arg(long, default_value_t = 10)]
    pub n: u32,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Power-law or exponential exponent.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Gaussian width.
    #[arg(long, default_value_t = 0.125)]
    pub sigma: f64,
    /// Gaussian tail anchor.
    #[arg(long, value_enum, default_value_t = Anchor::Origin)]
    pub anchor: Anchor,
    /// Mesh resolution for mesh2d.
    #[arg(long, default_value_t = 3)]
    pub mesh: usize,
    /// Grid points per axis for mesh2d.
    #[arg(long, default_value_t = 300)]
    pub grid: usize,
    /// Reference cells for a table target; omitted means a single constant level.
    #[arg(long)]
    pub pieces: Option<usize>,
    /// standard, rearranged (the target's own threshold form) or rotation.
    #[arg(long, default_value = "standard")]
    pub clause: String,
    /// Angle bits for the rotation variant; defaults to the plan's ratio bits.
    #[arg(long)]
    pub angle_bits: Option<u32>,
    /// Include every output amplitude, not only the first 16.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Origin,
    Boundary,
}

#[derive(Args, Debug, Clone)]
pub struct BlockArgs {
    /// coulomb3d, toeplitz1d, or a JSON matrix file.
    #[arg(long)]
    pub matrix: String,
    /// Coulomb grid exponent: side 2^nu + 1.
    #[arg(long, default_value_t = 2)]
    pub nu: u32,
    /// Toeplitz dimension.
    #[arg(long = "size", default_value_t = 64)]
    pub size: usize,
    /// all, lcuImplicit, lcuExplicit, ziggurat, rowColumn or column.
    #[arg(long, default_value = "all")]
    pub model: String,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Report only the closed-form Coulomb factors.
    #[arg(long)]
    pub closed_form_only: bool,
    /// Write each effective matrix as `<prefix>.<model>.bin` with a JSON sidecar.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EstimateArgs {
    /// inverse1d, inverse3d, gaussian, tanh or exponential.
    #[arg(long)]
    pub target: String,
    /// Domain size N; the register has ⌊log₂N⌋ + 1 qubits.
    #[arg(long, default_value_t = 1 << 20)]
    pub size: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Gaussian QROM term: table (default) or text.
    #[arg(long, value_enum, default_value_t = UfForm::Table)]
    pub uf_form: UfForm,
    /// Fixed tanh QROM split instead of the optimal one.
    #[arg(long)]
    pub k: Option<u32>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum UfForm {
    Table,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    /// inverse1d, inverse3d, gaussian, tanh, or all.
    #[arg(long)]
    pub target: String,
    /// Accuracies; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![1e-3, 1e-6, 1e-9])]
    pub eps: Vec<f64>,
    /// Smallest exponent p of the sweep over N = 2^p.
    #[arg(long, default_value_t = 10)]
    pub p_min: u32,
    /// Largest exponent p of the sweep.
    #[arg(long, default_value_t = 30)]
    pub p_max: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct MeshArgs {
    /// Highest mesh resolution.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 300)]
    pub grid: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Failure reported as `{"error": code, "message": ...}`.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn invalid(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            exit: 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: e.code().into(),
            message: e.to_string(),
            exit: if e.is_numerical() { 2 } else { 1 },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::invalid("io_error", e.to_string())
    }
}

fn report(err: &CliError) -> ExitCode {
    let body = json!({ "error": err.code, "message": err.message });
    let _ = writeln!(std::io::stderr(), "{body}");
    ExitCode::from(err.exit)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QRS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::invalid("invalid_arguments", format!("QRS_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::invalid("invalid_arguments", e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Plan(a) => commands::plan(&a),
        Command::Prepare(a) => commands::prepare(&a),
        Command::Blockencode(a) => commands::blockencode(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::MeshDemo(a) => commands::mesh_demo(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report(&CliError::invalid("invalid_arguments", e.to_string().trim().to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
