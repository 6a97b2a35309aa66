//! Command-line harness: solve joint-diagonalization instances from matrix
//! files, run seeded experiment families, separate mixed signals, and run the
//! built-in numerical checks.
//!
//! Exit codes: 0 success, 1 numerical failure (singular Newton system,
//! rank-deficient retraction, failed checks), 2 input error. Stdout carries
//! only data; diagnostics go to stderr.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

mod commands;
mod trace;

use stiefel_jd::stiefel::Metric;

#[derive(Parser)]
#[command(
    name = "stiefel-jd",
    about = "Joint approximate diagonalization on the Stiefel manifold: Riemannian Newton solver, Jacobi-like warm start, JADE source separation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Jointly diagonalize symmetric matrices read from CSV files.
    Jd(JdArgs),
    /// Run a seeded experiment family and emit per-trial traces.
    Bench(BenchArgs),
    /// Separate mixed signals (CSV channels or PGM images) with JADE.
    Ica(IcaArgs),
    /// Run the built-in derivative and identity checks.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Induced,
    Canonical,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Induced => Metric::Induced,
            MetricArg::Canonical => Metric::Canonical,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct SolverOpts {
    /// Riemannian metric for the Newton step.
    #[arg(long, value_enum, default_value = "induced")]
    metric: MetricArg,
    /// Iteration budget for the Newton solver.
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Gradient tolerance factor; the stopping threshold is
    /// grad_tol * max(1, sum of input Frobenius norms).
    #[arg(long, default_value_t = 1e-12)]
    grad_tol: f64,
}

#[derive(Args)]
struct OutputOpts {
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Trace file format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct JdArgs {
    /// CSV files holding the symmetric matrices (one per file).
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Number of columns of the sought frame; defaults to n.
    #[arg(short, long)]
    p: Option<usize>,
    /// CSV file with the initial point (n x p, orthonormal columns).
    #[arg(long)]
    y0: Option<PathBuf>,
    /// Run the Jacobi-like warm start (always on when p = n and no --y0 is
    /// given; without it, a p < n solve starts from the identity columns).
    #[arg(long)]
    jacobi: bool,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    /// Symmetrized Gaussian matrices, random orthonormal start.
    RandomSymmetric,
    /// Exactly jointly diagonalizable family, Jacobi warm start.
    Commuting,
    /// Known-optimum instance started from a perturbation of the optimum.
    PerturbedOptimum,
    /// Random symmetric set: Jacobi warm start, then Newton polish.
    JacobiThenNewton,
}

impl FamilyArg {
    fn name(self) -> &'static str {
        match self {
            FamilyArg::RandomSymmetric => "random-symmetric",
            FamilyArg::Commuting => "commuting",
            FamilyArg::PerturbedOptimum => "perturbed-optimum",
            FamilyArg::JacobiThenNewton => "jacobi-then-newton",
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    /// Frame width; defaults to n.
    #[arg(short, long)]
    p: Option<usize>,
    /// Number of matrices in each instance.
    #[arg(long, default_value_t = 10)]
    num_matrices: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Entry scale of the start perturbation (perturbed-optimum family).
    #[arg(long, default_value_t = 0.01)]
    perturbation: f64,
    /// Warm-start sweep tolerance (jacobi-then-newton family).
    #[arg(long, default_value_t = 1e-5)]
    jacobi_tol: f64,
    /// Force serial trial execution (reference mode).
    #[arg(long)]
    serial: bool,
    /// Record wall time in traces (breaks byte-for-byte reproducibility).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct IcaArgs {
    /// Observed mixture channels (CSV rows or PGM images).
    #[arg(long, num_args = 1..)]
    mixtures: Vec<PathBuf>,
    /// Source channels to mix internally with --mixing (the sources then
    /// serve as ground truth for alignment).
    #[arg(long, num_args = 1..)]
    sources: Vec<PathBuf>,
    /// Mixing matrix (CSV) applied to --sources.
    #[arg(long)]
    mixing: Option<PathBuf>,
    /// Ground-truth channels for alignment diagnostics.
    #[arg(long, num_args = 1..)]
    truth: Vec<PathBuf>,
    /// Generate synthetic non-Gaussian sources instead of reading files.
    #[arg(long)]
    synthetic: bool,
    /// Channel count for --synthetic.
    #[arg(long, default_value_t = 3)]
    channels: usize,
    /// Sample count for --synthetic.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(short, long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    num_matrices: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            msg: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            msg: msg.into(),
        }
    }
}

impl From<stiefel_jd::Error> for CliError {
    fn from(e: stiefel_jd::Error) -> Self {
        use stiefel_jd::Error as E;
        let code = match &e {
            E::Io(_)
            | E::Parse { .. }
            | E::InvalidData { .. }
            | E::ShapeMismatch { .. }
            | E::NotSquare { .. }
            | E::AsymmetricInput { .. }
            | E::NotOrthonormal { .. }
            | E::IndexOutOfRange { .. } => 2,
            E::SingularHessian { .. }
            | E::RankDeficient { .. }
            | E::NumericalBreakdown { .. }
            | E::SingularCovariance { .. }
            | E::ConvergenceFailure { .. }
            | E::NotSkew { .. }
            | E::NotTangent { .. }
            | E::AnchorMismatch => 1,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 2,
            msg: e.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Jd(args) => commands::jd::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Ica(args) => commands::ica::run(args),
        Command::Check(args) => commands::check::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.msg);
        std::process::exit(e.code);
    }
}
