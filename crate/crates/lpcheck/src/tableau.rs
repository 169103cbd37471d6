//! Dense two-phase tableau simplex. Dantzig pricing with a Bland fallback
//! once degenerate pivots pile up, so it terminates on anything it can fit
//! in memory. Deliberately a different algorithm family from the revised
//! simplex it cross-checks.

use crate::lpfile::{Cmp, LpProblem};
use crate::LpcheckError;

/// Cells above this are refused; the tableau is dense.
const MAX_CELLS: usize = 20_000_000;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TableauSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    width: usize,
    /// Constraint rows; one or two objective rows follow them.
    rows: usize,
    total_rows: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    bland: bool,
    degenerate_streak: usize,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.cells[r * self.width + c]
    }

    /// Pivots on `(pr, pc)`, updating every row including both objective
    /// rows.
    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) /= p;
        }
        for r in 0..self.total_rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for c in 0..w {
                    let v = self.at(pr, c);
                    *self.at_mut(r, c) -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Minimizes objective row `obj_row` over entering columns `0..ncols`.
    fn run(&mut self, obj_row: usize, ncols: usize, max_iters: usize) -> Result<(), LpcheckError> {
        let rhs_col = self.width - 1;
        loop {
            if self.iterations >= max_iters {
                return Err(LpcheckError::IterationLimit(self.iterations));
            }
            let mut enter = None;
            if self.bland {
                for c in 0..ncols {
                    if self.at(obj_row, c) < -EPS {
                        enter = Some(c);
                        break;
                    }
                }
            } else {
                let mut best = -EPS;
                for c in 0..ncols {
                    let v = self.at(obj_row, c);
                    if v < best {
                        best = v;
                        enter = Some(c);
                    }
                }
            }
            let Some(pc) = enter else { return Ok(()) };
            // Ratio test; ties to the smallest basis column keep Bland's
            // guarantee once in Bland mode.
            let mut best_ratio = f64::INFINITY;
            let mut pr = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.at(r, rhs_col).max(0.0) / a;
                    let better = match pr {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[r] < self.basis[cur])
                        }
                    };
                    if better {
                        best_ratio = ratio.min(best_ratio);
                        pr = Some(r);
                    }
                }
            }
            let Some(pr) = pr else {
                return Err(LpcheckError::Unbounded);
            };
            if best_ratio <= 1e-12 {
                self.degenerate_streak += 1;
                if self.degenerate_streak > 200 {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            self.pivot(pr, pc);
            self.iterations += 1;
        }
    }
}

/// Solves with the two-phase tableau method. Bounds other than `x >= 0`
/// are not supported (mechanism exports never produce them).
pub fn solve(lp: &LpProblem, max_iters: usize) -> Result<TableauSolution, LpcheckError> {
    let n = lp.var_count();
    for v in 0..n {
        if lp.lower[v] != 0.0 || lp.upper[v].is_finite() {
            return Err(LpcheckError::Unsupported(format!(
                "variable {} has bounds other than >= 0",
                lp.var_names[v]
            )));
        }
    }
    let m = lp.rows.len();

    // Normalize each row to rhs >= 0 and classify.
    let mut normalized: Vec<(f64, Cmp)> = Vec::with_capacity(m);
    let mut n_slack = 0usize;
    let mut n_art = 0usize;
    for row in &lp.rows {
        let flip = row.rhs < 0.0;
        let cmp = match (row.cmp, flip) {
            (Cmp::Le, false) | (Cmp::Ge, true) => Cmp::Le,
            (Cmp::Ge, false) | (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Eq, _) => Cmp::Eq,
        };
        match cmp {
            Cmp::Le => n_slack += 1,
            Cmp::Ge => {
                n_slack += 1;
                n_art += 1;
            }
            Cmp::Eq => n_art += 1,
        }
        normalized.push((if flip { -1.0 } else { 1.0 }, cmp));
    }

    let width = n + n_slack + n_art + 1;
    let total_rows = m + 2;
    let cells = total_rows
        .checked_mul(width)
        .ok_or_else(|| LpcheckError::Unsupported("size overflow".into()))?;
    if cells > MAX_CELLS {
        return Err(LpcheckError::Unsupported(format!(
            "tableau would need {cells} cells; use the pdhg method"
        )));
    }

    let mut t = Tableau {
        width,
        rows: m,
        total_rows,
        cells: vec![0.0; cells],
        basis: vec![usize::MAX; m],
        bland: false,
        degenerate_streak: 0,
        iterations: 0,
    };
    let rhs_col = width - 1;
    let mut slack_cursor = n;
    let mut art_cursor = n + n_slack;
    let art_start = n + n_slack;
    for (r, row) in lp.rows.iter().enumerate() {
        let (s, cmp) = normalized[r];
        for &(v, coef) in &row.terms {
            *t.at_mut(r, v) += s * coef;
        }
        *t.at_mut(r, rhs_col) = s * row.rhs;
        match cmp {
            Cmp::Le => {
                *t.at_mut(r, slack_cursor) = 1.0;
                t.basis[r] = slack_cursor;
                slack_cursor += 1;
            }
            Cmp::Ge => {
                *t.at_mut(r, slack_cursor) = -1.0;
                slack_cursor += 1;
                *t.at_mut(r, art_cursor) = 1.0;
                t.basis[r] = art_cursor;
                art_cursor += 1;
            }
            Cmp::Eq => {
                *t.at_mut(r, art_cursor) = 1.0;
                t.basis[r] = art_cursor;
                art_cursor += 1;
            }
        }
    }

    // Row m: the real objective (as minimization). Row m + 1: phase 1.
    let sense = if lp.minimize { 1.0 } else { -1.0 };
    for v in 0..n {
        *t.at_mut(m, v) = sense * lp.objective[v];
    }
    if n_art > 0 {
        let obj1 = m + 1;
        for a in art_start..art_start + n_art {
            *t.at_mut(obj1, a) = 1.0;
        }
        // Price out the basic artificials.
        for r in 0..m {
            if t.basis[r] >= art_start {
                for c in 0..width {
                    let v = t.at(r, c);
                    *t.at_mut(obj1, c) -= v;
                }
            }
        }
        t.run(obj1, width - 1, max_iters)?;
        let infeas = -t.at(obj1, rhs_col);
        if infeas.abs() > 1e-7 {
            return Err(LpcheckError::Infeasible(infeas.abs()));
        }
        // Drive remaining zero-level artificials out of the basis where a
        // nonzero pivot exists.
        for r in 0..m {
            if t.basis[r] >= art_start {
                for c in 0..art_start {
                    if t.at(r, c).abs() > 1e-7 {
                        t.pivot(r, c);
                        break;
                    }
                }
            }
        }
    }

    // Phase 2 over structural and slack columns only.
    t.run(m, n + n_slack, max_iters)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.at(r, rhs_col);
        }
    }
    let objective = lp.objective_value(&x);
    Ok(TableauSolution {
        x,
        objective,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpfile::parse_str;

    #[test]
    fn solves_textbook_max() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let text = "Maximize\n obj: 3 x + 5 y\nSubject To\n a: x <= 4\n b: 2 y <= 12\n c: 3 x + 2 y <= 18\nEnd\n";
        let lp = parse_str(text).unwrap();
        let sol = solve(&lp, 10_000).unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
        assert!((sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn solves_with_equalities() {
        // min x + y st x + y = 1, x - y <= 0 -> 1 anywhere on the segment.
        let text = "Minimize\n obj: x + y\nSubject To\n a: x + y = 1\n b: x - y <= 0\nEnd\n";
        let lp = parse_str(text).unwrap();
        let sol = solve(&lp, 10_000).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minimizes_against_ge_rows() {
        // min 4x + 3y st 2x + y >= 8, x + 2y >= 6 -> x = 10/3, y = 4/3.
        let text = "Minimize\n obj: 4 x + 3 y\nSubject To\n a: 2 x + y >= 8\n b: x + 2 y >= 6\nEnd\n";
        let lp = parse_str(text).unwrap();
        let sol = solve(&lp, 10_000).unwrap();
        assert!((sol.objective - (4.0 * 10.0 / 3.0 + 3.0 * 4.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible() {
        let text = "Minimize\n obj: x\nSubject To\n a: x <= -1\nEnd\n";
        let lp = parse_str(text).unwrap();
        assert!(matches!(
            solve(&lp, 10_000),
            Err(LpcheckError::Infeasible(_))
        ));
    }

    #[test]
    fn reports_unbounded() {
        let text = "Maximize\n obj: x\nSubject To\n a: x >= 1\nEnd\n";
        let lp = parse_str(text).unwrap();
        assert!(matches!(solve(&lp, 10_000), Err(LpcheckError::Unbounded)));
    }

    #[test]
    fn two_location_mechanism_program() {
        // The 2-location mechanism program: optimum 1/3.
        let text = "Minimize\n obj: 0.5 p01 + 0.5 p10\nSubject To\n n0: p00 + p01 = 1\n n1: p10 + p11 = 1\n c0: p00 - 2 p10 <= 0\n c1: p01 - 2 p11 <= 0\n c2: p10 - 2 p00 <= 0\n c3: p11 - 2 p01 <= 0\nEnd\n";
        let lp = parse_str(text).unwrap();
        let sol = solve(&lp, 10_000).unwrap();
        assert!((sol.objective - 1.0 / 3.0).abs() < 1e-9);
    }
}
