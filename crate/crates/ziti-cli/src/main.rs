use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::Settings;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, settings or inputs (exit 2).
    Validation(String),
    /// Blow-up, singular or inaccurate solve, failed integration (exit 3).
    Numerical(String),
    /// Files (exit 4).
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ziti::Error> for CliError {
    fn from(e: ziti::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ziti", version, about = "Bump-basis quadrature and PDE solvers on the unit disk")]
pub struct Cli {
    /// key=value settings file; flags override it, ZITI_* variables sit in between.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Omit the timestamp line and the wall time column.
    #[arg(long, global = true, visible_alias = "no-timestamp")]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dump a one-dimensional basis.
    Basis(BasisArgs),
    /// Dump the collocation points of a disk mesh.
    Mesh(MeshArgs),
    /// Integrate a catalog integrand.
    Integrate(IntegrateArgs),
    /// Solve -Lap u = f with u = 0 on the circle.
    Poisson(PoissonArgs),
    /// Step the heat equation to a final time.
    Heat(HeatArgs),
    /// Error table over a sweep of grid sizes.
    Convergence(ConvergenceArgs),
    /// Compare the basis rules with trapezoid and Simpson on the catalog.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    /// cartesian or polar (integrate also takes polar-rect, trapezoid, simpson)
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nr: Option<usize>,
    #[arg(long)]
    pub ntheta: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct BasisArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// calibrated, collocation or interpolatory
    #[arg(long)]
    pub rule: Option<String>,
    /// Also report the largest deviation of the Gram matrix from the identity.
    #[arg(long)]
    pub gram: bool,
    /// Absolute tolerance of the Gram integrals.
    #[arg(long)]
    pub tol_int: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct MeshArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub integrand: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SolverArgs {
    /// second-order or compact
    #[arg(long)]
    pub stencil: Option<String>,
    /// Same as --stencil second-order.
    #[arg(long, conflicts_with = "stencil")]
    pub second_order: bool,
    /// Periodic angular closure instead of copying the neighbouring angle.
    #[arg(long)]
    pub periodic_theta: bool,
}

#[derive(Args, Debug, Default)]
pub struct PoissonArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Constant source; the exact solution is f (1 - x^2 - y^2) / 4.
    #[arg(long, allow_negative_numbers = true)]
    pub f: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// CSV of i, j, x, y, u, u_exact, abs_err.
    #[arg(long)]
    pub dump_field: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct HeatParams {
    /// Safety factor of the time step.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub tf: Option<f64>,
    /// Diffusion coefficient.
    #[arg(long)]
    pub d: Option<f64>,
    /// diffusive or anti-diffusive
    #[arg(long)]
    pub sign: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct HeatArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub heat: HeatParams,
    /// Append the field to --dump-field every this many steps.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// CSV of step, t, i, j, x, y, u, u_exact, abs_err.
    #[arg(long)]
    pub dump_field: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ConvergenceArgs {
    /// poisson or heat
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub strategy: Option<String>,
    /// Comma separated sizes; N_r = N_theta = size for the polar mesh.
    #[arg(long)]
    pub sizes: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub heat: HeatParams,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct BenchArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma separated subset of the catalog.
    #[arg(long)]
    pub integrands: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut s = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    s.overlay_env(std::env::vars());
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = settings(&cli).and_then(|s| commands::run(&cli, &s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ziti: {e}");
            ExitCode::from(e.code())
        }
    }
}
