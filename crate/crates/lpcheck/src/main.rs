use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lpcheck::{solve_file, Method};

/// Solve an LP file and write a `variable value` solution file.
#[derive(Parser, Debug)]
#[command(name = "lpcheck", version)]
struct Args {
    /// LP file to solve.
    lp: PathBuf,

    /// Where to write the solution.
    #[arg(long, short)]
    out: PathBuf,

    /// auto, simplex, or pdhg.
    #[arg(long, default_value = "auto")]
    method: String,

    #[arg(long, default_value_t = 600_000)]
    max_iters: usize,

    /// Residual target for the pdhg method.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,

    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let method = match args.method.as_str() {
        "auto" => Method::Auto,
        "simplex" => Method::Simplex,
        "pdhg" => Method::Pdhg,
        other => {
            eprintln!("unknown method {other:?}; expected auto, simplex, or pdhg");
            return ExitCode::from(2);
        }
    };
    match solve_file(&args.lp, &args.out, method, args.max_iters, args.tol) {
        Ok(outcome) => {
            if !args.quiet {
                println!(
                    "objective {} method {} iterations {} residuals {:.2e}/{:.2e}/{:.2e}",
                    outcome.objective,
                    outcome.method,
                    outcome.iterations,
                    outcome.primal_res,
                    outcome.dual_res,
                    outcome.rel_gap
                );
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("lpcheck: {err}");
            ExitCode::FAILURE
        }
    }
}
