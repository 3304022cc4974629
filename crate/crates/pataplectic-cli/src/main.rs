mod commands;
mod files;
mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// De Donder-Weyl field theories in pataplectic form: models, brackets,
/// lattice simulation and verification.
#[derive(Parser, Debug)]
#[command(name = "pataplectic", version)]
struct Cli {
    /// Print wall times to stderr and include them in reports (reports are then not byte-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Inspect a model definition.
    Model {
        #[command(subcommand)]
        action: ModelCmd,
    },
    /// Forward Legendre map and its inversion at sample points.
    Legendre(LegendreArgs),
    /// Bracket of two observables.
    Bracket(BracketArgs),
    /// Randomized symbolic identity suite.
    VerifyIdentities(IdentityArgs),
    /// Evolve initial data with the De Donder-Weyl solver and write a trajectory.
    Simulate(SimulateArgs),
    /// On-solution checks of a trajectory with a refinement study.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum ModelCmd {
    /// Print the chart, Lagrangian, Hamiltonian and sigma-model data as JSON.
    Show {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct LegendreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// JSON list of `{"q": [...], "v": [...], "w": number}`; random points when absent.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted round-trip error.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BracketArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Observable JSON, inline or as a file path.
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IdentityArgs {
    /// Chart JSON `{"n": .., "k": ..}`; the three default charts when absent.
    #[arg(long)]
    pub chart: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum CheckName {
    Action,
    El,
    Lemma4,
    Noether,
    Slices,
    Stokes,
    Stress,
    Theorem2,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Checks to run; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub check: Vec<CheckName>,
    /// Number of lattices in the refinement ladder, the file's lattice first.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 1.7)]
    pub min_order: f64,
    /// Residuals at or below this count as exact.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Quadrature tolerance of the Stokes check on the finest lattice.
    #[arg(long, default_value_t = 1e-6)]
    pub quad_tol: f64,
    /// Observable JSON for theorem2, stokes and slices (inline or a path); defaults are built from the chart.
    #[arg(long)]
    pub observable: Vec<String>,
    /// Components of the Noether generator on base and fibre, in order; defaults to time translation.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Vec<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub enum Failure {
    /// Bad input, IO or a library error: exit 1.
    Usage(String),
    /// A check ran and failed: exit 2.
    Check,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PATAPLECTIC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        Failure::Usage(format!(
            "PATAPLECTIC_THREADS: '{v}' is not a non-negative integer"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let start = std::time::Instant::now();
    let out = match cli.cmd {
        Cmd::Model {
            action: ModelCmd::Show { model, out },
        } => commands::model_show(&model, out.as_deref()),
        Cmd::Legendre(a) => commands::legendre(&a),
        Cmd::Bracket(a) => commands::bracket(&a),
        Cmd::VerifyIdentities(a) => commands::verify_identities(&a),
        Cmd::Simulate(a) => commands::simulate(&a),
        Cmd::Verify(a) => verify::run(&a, cli.timings),
    };
    if cli.timings {
        eprintln!("wall time {:.3}s", start.elapsed().as_secs_f64());
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
