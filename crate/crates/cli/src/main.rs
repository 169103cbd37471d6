//! Batch front end for building, inspecting, and verifying
//! location-obfuscation mechanisms.
//!
//! Exit codes: 0 success/verified, 1 verification failure, 2 usage error,
//! 3 solver failure.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::SolverChoice;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad files, or inputs outside a command's domain.
    Usage(String),
    /// The mechanism failed privacy verification.
    NotSatisfied,
    /// The solver gave up or could not certify its answer.
    Solver(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::NotSatisfied => write!(f, "privacy verification failed"),
            CliError::Solver(msg) => write!(f, "solver failure: {msg}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "geoind", version, about = "Location-obfuscation mechanisms with geo-indistinguishability guarantees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a grid of locations as CSV.
    BuildGrid(BuildGridArgs),
    /// Build a mechanism (builtin solver) or export its program (LP file).
    Solve(SolveArgs),
    /// Exhaustively verify a mechanism against the privacy definition.
    Verify(VerifyArgs),
    /// Edge set and exact dilation for a radius.
    Dilation(DilationArgs),
    /// Objective/time table over grid sizes and c values, as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct BuildGridArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// RunConfig JSON; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Locations CSV (id,x,y).
    #[arg(long)]
    locations: Option<PathBuf>,
    /// Prior CSV (id,prob); uniform when omitted.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Privacy level per unit distance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Full constraint set: one row per ordered pair and report.
    #[arg(long, conflicts_with = "reduced")]
    exact: bool,
    /// Radius-reduced constraint set tightened by the dilation.
    #[arg(long)]
    reduced: bool,
    /// Edge radius R (reduced mode).
    #[arg(long, conflicts_with = "c")]
    radius: Option<f64>,
    /// Edge radius as c, where R = c * rho (reduced mode).
    #[arg(long)]
    c: Option<f64>,
    /// Covering radius override for location sets that are not grids.
    #[arg(long)]
    rho: Option<f64>,
    /// "auto" (exact graph dilation) or a fixed value.
    #[arg(long)]
    delta: Option<String>,
    /// builtin or export.
    #[arg(long)]
    solver: Option<String>,
    /// Mechanism JSON output (builtin solver).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON output; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// LP file output (export mode).
    #[arg(long)]
    lp_out: Option<PathBuf>,
    /// Debug dump of the constraint set as a,b,y,mult CSV.
    #[arg(long)]
    dump_constraints: Option<PathBuf>,
    /// Echoed into the report; sampling seeds are always explicit.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    feas_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    mechanism: PathBuf,
    #[arg(long)]
    locations: PathBuf,
    /// Privacy level to verify at.
    #[arg(long)]
    epsilon: f64,
    /// Accepted log-ratio slack.
    #[arg(long, default_value_t = 1e-7, allow_hyphen_values = true)]
    tol: f64,
    /// Report JSON output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DilationArgs {
    #[arg(long)]
    locations: PathBuf,
    #[arg(long, conflicts_with = "c")]
    radius: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// JSON output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated grid side lengths, e.g. 3,4,5.
    #[arg(long)]
    sizes: String,
    /// Comma-separated c values, e.g. 2.8,3.4,4.2.
    #[arg(long)]
    c: String,
    #[arg(long)]
    epsilon: f64,
    /// Also run the exact program for each grid.
    #[arg(long)]
    include_exact: bool,
    /// builtin or export.
    #[arg(long, default_value = "builtin")]
    solver: String,
    #[arg(long)]
    out: PathBuf,
    /// Directory for LP files in export mode.
    #[arg(long)]
    lp_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::BuildGrid(a) => run::cmd_build_grid(a.rows, a.cols, a.spacing, &a.out),
        Cmd::Solve(a) => run::cmd_solve(&run::SolveInputs {
            config: a.config,
            locations: a.locations,
            prior: a.prior,
            epsilon: a.epsilon,
            exact: a.exact,
            reduced: a.reduced,
            radius: a.radius,
            c: a.c,
            rho: a.rho,
            delta: a.delta,
            solver: a.solver,
            out: a.out,
            report: a.report,
            lp_out: a.lp_out,
            dump_constraints: a.dump_constraints,
            seed: a.seed,
            max_iters: a.max_iters,
            feas_tol: a.feas_tol,
        }),
        Cmd::Verify(a) => run::cmd_verify(&a.mechanism, &a.locations, a.epsilon, a.tol, &a.out),
        Cmd::Dilation(a) => run::cmd_dilation(&a.locations, a.radius, a.c, a.rho, &a.out),
        Cmd::Sweep(a) => {
            let solver = match a.solver.as_str() {
                "builtin" => SolverChoice::Builtin,
                "export" => SolverChoice::Export,
                other => return Err(CliError::Usage(format!("unknown solver {other:?}"))),
            };
            run::cmd_sweep(&run::SweepInputs {
                sizes: parse_list(&a.sizes, "--sizes")?,
                c: parse_list(&a.c, "--c")?,
                epsilon: a.epsilon,
                include_exact: a.include_exact,
                solver,
                out: a.out,
                lp_dir: a.lp_dir,
                spacing: a.spacing,
                max_iters: a.max_iters,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::NotSatisfied) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("geoind: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("geoind: solver failure: {msg}");
            ExitCode::from(3)
        }
    }
}
