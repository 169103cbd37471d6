//! Linear-program assembly, text export for external solvers, and solution
//! import with independent feasibility checking.
//!
//! The program over a mechanism's entries `p(y|x)` minimizes the expected
//! distance `sum_{x,y} pi(x) p(y|x) d(x,y)` subject to one normalization row
//! per true location, one privacy row per constraint, and nonnegativity.
//! Variables are ordered x-major (`var = x * n + y`), the canonical order
//! every matrix in this crate uses.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LocationSet, Prior};
use crate::spanner::ConstraintSet;

/// Feasibility tolerance applied to imported solutions.
pub const IMPORT_FEAS_TOL: f64 = 1e-7;

/// One privacy inequality in variable form:
/// `p[plus] - mult * p[minus] <= 0`, both variables reporting the same `y`.
#[derive(Debug, Clone, Copy)]
pub struct IneqRow {
    pub plus: usize,
    pub minus: usize,
    pub mult: f64,
    pub a: usize,
    pub b: usize,
    pub y: usize,
}

/// The assembled program: objective, `n` implicit normalization rows
/// `sum_y p(y|x) = 1`, sparse privacy rows, and `p >= 0` bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    ineq: Vec<IneqRow>,
    ids: Vec<String>,
}

impl LinearProgram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn var_count(&self) -> usize {
        self.n * self.n
    }

    pub fn row_count(&self) -> usize {
        self.n + self.ineq.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn ineq_rows(&self) -> &[IneqRow] {
        &self.ineq
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Canonical variable index of `p(y|x)`.
    pub fn var(&self, x: usize, y: usize) -> usize {
        x * self.n + y
    }

    /// Exported name of variable `p(y|x)`: `p_{xid}_{yid}`.
    pub fn var_name(&self, v: usize) -> String {
        format!("p_{}_{}", self.ids[v / self.n], self.ids[v % self.n])
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(point)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// The uniform mechanism `p(y|x) = 1/n`, feasible for every well-formed
    /// program (each multiplier is at least 1).
    pub fn uniform_point(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.var_count()]
    }

    /// Largest constraint violation of `point` and a name for the row
    /// attaining it. Checks bounds, normalization rows, and privacy rows.
    pub fn max_violation(&self, point: &[f64]) -> (f64, String) {
        let mut worst = f64::NEG_INFINITY;
        let mut name = String::from("none");
        for (v, &p) in point.iter().enumerate() {
            if -p > worst {
                worst = -p;
                name = format!("bound_{}", self.var_name(v));
            }
        }
        for x in 0..self.n {
            let sum: f64 = point[x * self.n..(x + 1) * self.n].iter().sum();
            if (sum - 1.0).abs() > worst {
                worst = (sum - 1.0).abs();
                name = format!("norm_{x}");
            }
        }
        for r in &self.ineq {
            let v = point[r.plus] - r.mult * point[r.minus];
            if v > worst {
                worst = v;
                name = format!("priv_{}_{}_{}", r.a, r.b, r.y);
            }
        }
        (worst, name)
    }
}

/// Builds the program from locations, a prior, and a constraint set.
pub fn assemble(locs: &LocationSet, prior: &Prior, cs: &ConstraintSet) -> Result<LinearProgram> {
    let n = locs.len();
    if prior.len() != n {
        return Err(Error::DimensionMismatch {
            prior: prior.len(),
            locs: n,
        });
    }
    if cs.n() != n {
        return Err(Error::DimensionMismatch {
            prior: cs.n(),
            locs: n,
        });
    }
    let mut objective = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            objective[x * n + y] = prior.probs()[x] * locs.distance(x, y)?;
        }
    }
    let ineq = cs
        .rows()
        .iter()
        .map(|r| IneqRow {
            plus: r.a * n + r.y,
            minus: r.b * n + r.y,
            mult: r.mult,
            a: r.a,
            b: r.b,
            y: r.y,
        })
        .collect();
    Ok(LinearProgram {
        n,
        objective,
        ineq,
        ids: locs.ids().to_vec(),
    })
}

const TERMS_PER_LINE: usize = 8;

/// Writes the program in LP text format, deterministically byte-for-byte.
///
/// Layout: a `Minimize` section with the objective, `Subject To` with
/// `norm_{x}` equality rows and `priv_{a}_{b}_{y}` inequality rows, a
/// `Bounds` section with nonnegativity, and `End`. Variables are named
/// `p_{xid}_{yid}`.
pub fn export_lp(lp: &LinearProgram, path: &Path) -> Result<()> {
    let names: Vec<String> = (0..lp.var_count()).map(|v| lp.var_name(v)).collect();
    {
        let mut seen = HashMap::new();
        for (v, name) in names.iter().enumerate() {
            if let Some(prev) = seen.insert(name.as_str(), v) {
                return Err(Error::Malformed {
                    what: "LP export",
                    line: 0,
                    detail: format!(
                        "location ids produce colliding variable names ({} and {} both map to {name})",
                        prev, v
                    ),
                });
            }
        }
    }
    let mut out = String::new();
    out.push_str("\\ geoind mechanism linear program\n");
    writeln!(
        out,
        "\\ {} variables, {} normalization rows, {} privacy rows",
        lp.var_count(),
        lp.n,
        lp.ineq.len()
    )
    .expect("string write");
    out.push_str("Minimize\n obj:");
    let mut terms = 0usize;
    let mut any = false;
    for (v, &c) in lp.objective.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if terms == TERMS_PER_LINE {
            out.push_str("\n   ");
            terms = 0;
        }
        if any {
            write!(out, " + {} {}", c, names[v]).expect("string write");
        } else {
            write!(out, " {} {}", c, names[v]).expect("string write");
            any = true;
        }
        terms += 1;
    }
    if !any {
        write!(out, " 0 {}", names[0]).expect("string write");
    }
    out.push_str("\nSubject To\n");
    for x in 0..lp.n {
        write!(out, " norm_{x}:").expect("string write");
        for y in 0..lp.n {
            if y > 0 && y % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            if y == 0 {
                write!(out, " {}", names[lp.var(x, y)]).expect("string write");
            } else {
                write!(out, " + {}", names[lp.var(x, y)]).expect("string write");
            }
        }
        out.push_str(" = 1\n");
    }
    for r in &lp.ineq {
        writeln!(
            out,
            " priv_{}_{}_{}: {} - {} {} <= 0",
            r.a, r.b, r.y, names[r.plus], r.mult, names[r.minus]
        )
        .expect("string write");
    }
    out.push_str("Bounds\n");
    for name in &names {
        writeln!(out, " {name} >= 0").expect("string write");
    }
    out.push_str("End\n");
    std::fs::write(path, out)?;
    Ok(())
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// Which route produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Builtin,
    External,
}

/// What a solve produced, beyond the point itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub solver: SolverKind,
}

/// Reads an external solver's solution (`variable value` per line, `#`
/// comments ignored), aligns it to the canonical variable order, and
/// re-checks feasibility within [`IMPORT_FEAS_TOL`].
///
/// Optimality is the external solver's claim; feasibility is not.
pub fn import_solution(path: &Path, lp: &LinearProgram) -> Result<(Vec<f64>, SolveReport)> {
    let start = std::time::Instant::now();
    let text = std::fs::read_to_string(path)?;
    let index: HashMap<String, usize> = (0..lp.var_count())
        .map(|v| (lp.var_name(v), v))
        .collect();
    let mut point = vec![f64::NAN; lp.var_count()];
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (name, value) = match (parts.next(), parts.next(), parts.next()) {
            (Some(name), Some(value), None) => (name, value),
            _ => {
                return Err(Error::Malformed {
                    what: "solution file",
                    line: lineno + 1,
                    detail: format!("expected \"name value\", got {line:?}"),
                })
            }
        };
        let v = *index
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        let value: f64 = value.parse().map_err(|_| Error::Malformed {
            what: "solution file",
            line: lineno + 1,
            detail: format!("bad float {value:?}"),
        })?;
        if !point[v].is_nan() {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
        point[v] = value;
    }
    for (v, value) in point.iter().enumerate() {
        if value.is_nan() {
            return Err(Error::MissingVariable(lp.var_name(v)));
        }
    }
    let (max_violation, row) = lp.max_violation(&point);
    if max_violation > IMPORT_FEAS_TOL {
        return Err(Error::InfeasiblePoint { max_violation, row });
    }
    let report = SolveReport {
        status: SolveStatus::Optimal,
        objective_value: lp.objective_value(&point),
        iterations: 0,
        wall_time_s: start.elapsed().as_secs_f64(),
        solver: SolverKind::External,
    };
    Ok((point, report))
}

/// Writes a solution in the import format (the same one external solvers
/// are expected to produce).
pub fn write_solution(lp: &LinearProgram, point: &[f64], path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# objective {}", lp.objective_value(point)).expect("string write");
    for (v, &p) in point.iter().enumerate() {
        writeln!(out, "{} {}", lp.var_name(v), p).expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}
