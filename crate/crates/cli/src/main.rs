mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lagflow", version, about = "Exact Lagrangian solutions of the 2D ideal-fluid equations: evaluation and verification")]
struct Cli {
    /// TOML file with defaults for any flag (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the solution families with constraints and cross-references.
    List,
    /// Run the full residual suite on one family (or `all` catalog defaults).
    Verify(VerifyArgs),
    /// Eulerian fields on a regular grid, as CSV.
    Fields(FieldsArgs),
    /// Particle paths, as CSV.
    Trajectories(TrajectoryArgs),
    /// Samples of an isobar with curvature and arc length, as CSV.
    Boundary(BoundaryArgs),
    /// Check that group elements map solutions to solutions.
    Symmetry(SymmetryArgs),
    /// Exact check of the p_k, q_k recurrence relations.
    Counterexample(CounterexampleArgs),
}

/// Family selection and parameters.
#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    /// A, B, C1 … C6 (also `C.2` style).
    #[arg(long)]
    pub family: Option<String>,
    /// Family A profile S(eta).
    #[arg(long = "S", id = "S")]
    pub s: Option<String>,
    /// Family B profile N(eta).
    #[arg(long = "N", id = "N")]
    pub n: Option<String>,
    /// Family B initial value S(eta0).
    #[arg(long = "S0", id = "S0", allow_hyphen_values = true)]
    pub s0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta0: Option<f64>,
    /// Family B integration range `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub eta_range: Option<String>,
    /// Family C3 parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Families C5 and C6 angle.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Family C5 sigma interval `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_domain: Option<String>,
}

impl FamilyArgs {
    pub fn has_params(&self) -> bool {
        self.s.is_some()
            || self.n.is_some()
            || self.s0.is_some()
            || self.eta0.is_some()
            || self.eta_range.is_some()
            || self.k.is_some()
            || self.theta.is_some()
            || self.sigma_domain.is_some()
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Grid counts `nt,nxi,nc`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Tolerance overrides `name=value,…`.
    #[arg(long)]
    pub tol: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FieldsArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub time: Option<f64>,
    /// `x0,x1,y0,y1`.
    #[arg(long, allow_hyphen_values = true)]
    pub bbox: String,
    /// Node counts `nx,ny`.
    #[arg(long, default_value = "21,21")]
    pub n: String,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON manifest with residual maxima.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Particle labels `xi,c;xi,c;…` in chart coordinates (default: 3×3 over the sample box).
    #[arg(long, allow_hyphen_values = true)]
    pub particles: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Pressure level of the isobar (default: middle of the sample box).
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub time: Option<f64>,
    /// `xi0,xi1`.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// X1 … X10, time_reversal, reflection, `all`, or `broken_dilation` (a deliberately wrong map).
    #[arg(long, default_value = "all")]
    pub element: String,
    #[arg(long, allow_hyphen_values = true)]
    pub param: Option<f64>,
    /// Profile phi(eta) for X1.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Product in h_k: `unit` for (s² + n²), `even` for (s² + 4n²).
    #[arg(long)]
    pub shift: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(pass) => ExitCode::from(if pass { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
