//! Standalone checker for LP files: parses the text format, solves with a
//! method independent of the program that produced the file, and writes a
//! `variable value` solution file.

pub mod lpfile;
pub mod pdhg;
pub mod tableau;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpcheckError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported program: {0}")]
    Unsupported(String),
    #[error("program is infeasible (phase-1 residual {0})")]
    Infeasible(f64),
    #[error("program is unbounded")]
    Unbounded,
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Simplex,
    Pdhg,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub objective: f64,
    pub iterations: usize,
    pub method: &'static str,
    /// KKT residuals; exact zeros for the simplex path, measured values for
    /// pdhg.
    pub primal_res: f64,
    pub dual_res: f64,
    pub rel_gap: f64,
}

/// Rough size gate below which the dense tableau is preferred.
fn fits_tableau(lp: &lpfile::LpProblem) -> bool {
    let m = lp.rows.len();
    let width = 2 * m + lp.var_count() + 1;
    (m + 2).saturating_mul(width) <= 20_000_000
}

pub fn solve_problem(
    lp: &lpfile::LpProblem,
    method: Method,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, Outcome), LpcheckError> {
    let chosen = match method {
        Method::Auto => {
            if fits_tableau(lp) {
                Method::Simplex
            } else {
                Method::Pdhg
            }
        }
        m => m,
    };
    match chosen {
        Method::Simplex => {
            let sol = tableau::solve(lp, max_iters)?;
            Ok((
                sol.x,
                Outcome {
                    objective: sol.objective,
                    iterations: sol.iterations,
                    method: "simplex",
                    primal_res: 0.0,
                    dual_res: 0.0,
                    rel_gap: 0.0,
                },
            ))
        }
        Method::Pdhg => {
            let opts = pdhg::PdhgOptions {
                max_iters,
                feas_tol: tol,
                gap_tol: (tol * 10.0).max(1e-9),
                ..Default::default()
            };
            let sol = pdhg::solve(lp, &opts)?;
            Ok((
                sol.x,
                Outcome {
                    objective: sol.objective,
                    iterations: sol.iterations,
                    method: "pdhg",
                    primal_res: sol.primal_res,
                    dual_res: sol.dual_res,
                    rel_gap: sol.rel_gap,
                },
            ))
        }
        Method::Auto => unreachable!(),
    }
}

/// Parses `lp_path`, solves it, and writes the solution to `out_path` in
/// `variable value` lines with a `# objective` header comment.
pub fn solve_file(
    lp_path: &Path,
    out_path: &Path,
    method: Method,
    max_iters: usize,
    tol: f64,
) -> Result<Outcome, LpcheckError> {
    let text = std::fs::read_to_string(lp_path)?;
    let lp = lpfile::parse_str(&text)?;
    let (x, outcome) = solve_problem(&lp, method, max_iters, tol)?;
    let mut out = String::new();
    writeln!(out, "# objective {}", outcome.objective).expect("string write");
    writeln!(out, "# method {}", outcome.method).expect("string write");
    for (name, value) in lp.var_names.iter().zip(&x) {
        writeln!(out, "{name} {value}").expect("string write");
    }
    std::fs::write(out_path, out)?;
    Ok(outcome)
}
