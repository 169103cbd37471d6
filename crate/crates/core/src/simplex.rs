//! The builtin solver: a deterministic revised simplex, Dantzig pricing
//! with Bland's rule as the anti-cycling fallback and lowest-index
//! tie-breaking throughout.
//!
//! Mechanism programs always have far more rows than variables (`n + |C|`
//! rows over `n^2` variables), so the solver runs the simplex on the
//! standard-form dual, whose basis dimension is the variable count `n^2`
//! rather than the row count. The dual needs no phase 1: the primal
//! objective is nonnegative, so the all-slack dual basis is feasible from
//! the start. The optimal primal point and the certificate come from the
//! final basis multipliers.
//!
//! Dual layout, fixed once and used as Bland's variable order:
//! columns `[0, n)` are `mu+` (one per normalization row, cost -1),
//! `[n, 2n)` are `mu-` (cost +1), `[2n, 2n+K)` are `nu` (one per privacy
//! row, cost 0), and the last `n^2` are slacks. The right-hand side is the
//! primal objective vector.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, SolveReport, SolveStatus, SolverKind};

/// Entering threshold: reduced costs above `-PRICE_TOL` count as
/// nonnegative.
const PRICE_TOL: f64 = 1e-9;
/// Pivot elements smaller than this are not eligible in the ratio test.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Largest accepted violation of any primal row by the returned point.
    pub feas_tol: f64,
    /// Accepted duality gap, relative to `1 + |objective|`.
    pub opt_tol: f64,
    /// Rebuild the basis inverse from scratch every this many pivots.
    pub refactor_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            feas_tol: 1e-9,
            opt_tol: 1e-7,
            refactor_every: 200,
        }
    }
}

struct DualForm<'a> {
    lp: &'a LinearProgram,
    /// Basis dimension: the primal variable count.
    rows: usize,
    n_mu: usize,
    n_nu: usize,
    total_cols: usize,
}

impl<'a> DualForm<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let rows = lp.var_count();
        let n_mu = lp.n();
        let n_nu = lp.ineq_rows().len();
        Self {
            lp,
            rows,
            n_mu,
            n_nu,
            total_cols: 2 * n_mu + n_nu + rows,
        }
    }

    #[inline]
    fn cost(&self, j: usize) -> f64 {
        if j < self.n_mu {
            -1.0
        } else if j < 2 * self.n_mu {
            1.0
        } else {
            0.0
        }
    }

    fn col(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let n = self.n_mu;
        if j < n {
            for y in 0..n {
                out.push((j * n + y, 1.0));
            }
        } else if j < 2 * n {
            let x = j - n;
            for y in 0..n {
                out.push((x * n + y, -1.0));
            }
        } else if j < 2 * n + self.n_nu {
            let r = &self.lp.ineq_rows()[j - 2 * n];
            out.push((r.plus, -1.0));
            out.push((r.minus, r.mult));
        } else {
            out.push((j - 2 * n - self.n_nu, 1.0));
        }
    }
}

struct Simplex<'a> {
    d: DualForm<'a>,
    /// Dense inverse of the basis matrix, row-major `rows x rows`.
    binv: Vec<f64>,
    basis: Vec<usize>,
    /// Column index -> basis position, or `usize::MAX`.
    pos: Vec<usize>,
    xb: Vec<f64>,
    /// Simplex multipliers of the dual run; the primal point is their
    /// negation.
    y: Vec<f64>,
    rhs: Vec<f64>,
    col_buf: Vec<(usize, f64)>,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let d = DualForm::new(lp);
        let m = d.rows;
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let slack0 = 2 * d.n_mu + d.n_nu;
        let basis: Vec<usize> = (0..m).map(|r| slack0 + r).collect();
        let mut pos = vec![usize::MAX; d.total_cols];
        for (r, &j) in basis.iter().enumerate() {
            pos[j] = r;
        }
        let rhs = lp.objective().to_vec();
        let xb = rhs.clone();
        Self {
            y: vec![0.0; m],
            col_buf: Vec::with_capacity(d.n_mu.max(2)),
            d,
            binv,
            basis,
            pos,
            xb,
            rhs,
            iterations: 0,
        }
    }

    /// `y = c_B * B^{-1}`. Only mu columns carry cost, so at most `2n` rows
    /// of the inverse contribute.
    fn compute_y(&mut self) {
        let m = self.d.rows;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.d.cost(j);
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            if c == 1.0 {
                for (yi, bi) in self.y.iter_mut().zip(row) {
                    *yi += bi;
                }
            } else {
                for (yi, bi) in self.y.iter_mut().zip(row) {
                    *yi -= bi;
                }
            }
        }
    }

    /// Entering column. Default pricing is Dantzig (most negative reduced
    /// cost, lowest index on ties); under `bland` it is Bland's rule (first
    /// negative), the anti-cycling fallback.
    fn price(&mut self, bland: bool) -> Option<usize> {
        let mut best = -PRICE_TOL;
        let mut pick = None;
        for j in 0..self.d.total_cols {
            if self.pos[j] != usize::MAX {
                continue;
            }
            let mut dot = 0.0;
            match j {
                _ if j < self.d.n_mu => {
                    let x = j;
                    let n = self.d.n_mu;
                    for y in 0..n {
                        dot += self.y[x * n + y];
                    }
                }
                _ if j < 2 * self.d.n_mu => {
                    let x = j - self.d.n_mu;
                    let n = self.d.n_mu;
                    for y in 0..n {
                        dot -= self.y[x * n + y];
                    }
                }
                _ if j < 2 * self.d.n_mu + self.d.n_nu => {
                    let r = &self.d.lp.ineq_rows()[j - 2 * self.d.n_mu];
                    dot = r.mult * self.y[r.minus] - self.y[r.plus];
                }
                _ => {
                    dot = self.y[j - 2 * self.d.n_mu - self.d.n_nu];
                }
            }
            let reduced = self.d.cost(j) - dot;
            if reduced < best {
                best = reduced;
                pick = Some(j);
                if bland {
                    return pick;
                }
            }
        }
        pick
    }

    fn direction(&mut self, j: usize, u: &mut [f64]) {
        let m = self.d.rows;
        self.d.col(j, &mut self.col_buf);
        u.iter_mut().for_each(|v| *v = 0.0);
        for &(i, v) in &self.col_buf {
            for (r, ur) in u.iter_mut().enumerate().take(m) {
                *ur += self.binv[r * m + i] * v;
            }
        }
    }

    /// Minimum-ratio row; ties go to the smallest basis column index.
    fn ratio_test(&self, u: &[f64]) -> Option<usize> {
        let mut theta = f64::INFINITY;
        for (r, &ur) in u.iter().enumerate() {
            if ur > PIVOT_TOL {
                let ratio = self.xb[r].max(0.0) / ur;
                if ratio < theta {
                    theta = ratio;
                }
            }
        }
        if !theta.is_finite() {
            return None;
        }
        let window = theta + 1e-12 * (1.0 + theta);
        let mut leave: Option<usize> = None;
        for (r, &ur) in u.iter().enumerate() {
            if ur > PIVOT_TOL && self.xb[r].max(0.0) / ur <= window {
                match leave {
                    Some(cur) if self.basis[cur] <= self.basis[r] => {}
                    _ => leave = Some(r),
                }
            }
        }
        leave
    }

    fn pivot(&mut self, leave: usize, enter: usize, u: &[f64]) {
        let m = self.d.rows;
        let theta = self.xb[leave].max(0.0) / u[leave];
        for (r, &ur) in u.iter().enumerate() {
            self.xb[r] -= theta * ur;
            if self.xb[r] < 0.0 && self.xb[r] > -1e-11 {
                self.xb[r] = 0.0;
            }
        }
        self.xb[leave] = theta;

        let inv_pivot = 1.0 / u[leave];
        let (before, rest) = self.binv.split_at_mut(leave * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v *= inv_pivot;
        }
        for (r, chunk) in before.chunks_exact_mut(m).enumerate() {
            let f = u[r];
            if f != 0.0 {
                for (c, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *c -= f * p;
                }
            }
        }
        for (k, chunk) in after.chunks_exact_mut(m).enumerate() {
            let f = u[leave + 1 + k];
            if f != 0.0 {
                for (c, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *c -= f * p;
                }
            }
        }

        self.pos[self.basis[leave]] = usize::MAX;
        self.basis[leave] = enter;
        self.pos[enter] = leave;
    }

    /// Rebuilds the inverse from the basis columns by Gauss-Jordan
    /// elimination with partial pivoting, then recomputes the basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.d.rows;
        let mut b = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.d.col(j, &mut self.col_buf);
            for &(i, v) in &self.col_buf {
                b[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut best = col;
            let mut best_abs = b[col * m + col].abs();
            for r in (col + 1)..m {
                let a = b[r * m + col].abs();
                if a > best_abs {
                    best_abs = a;
                    best = r;
                }
            }
            if best_abs < 1e-12 {
                return Err(Error::SingularBasis);
            }
            if best != col {
                for c in 0..m {
                    b.swap(col * m + c, best * m + c);
                    inv.swap(col * m + c, best * m + c);
                }
            }
            let p = b[col * m + col];
            for c in 0..m {
                b[col * m + c] /= p;
                inv[col * m + c] /= p;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = b[r * m + col];
                if f != 0.0 {
                    for c in 0..m {
                        b[r * m + c] -= f * b[col * m + c];
                        inv[r * m + c] -= f * inv[col * m + c];
                    }
                }
            }
        }
        // Gauss-Jordan leaves the inverse of the PERMUTED... no: row ops are
        // applied to the identity as well, so `inv` is the true inverse.
        self.binv = inv;
        for r in 0..m {
            let mut v = 0.0;
            for i in 0..m {
                v += self.binv[r * m + i] * self.rhs[i];
            }
            self.xb[r] = if v < 0.0 && v > -1e-11 { 0.0 } else { v };
        }
        Ok(())
    }

    /// Reconstructs the primal point and the dual certificate from the
    /// current basis.
    fn extract(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let primal: Vec<f64> = self.y.iter().map(|v| -v).collect();
        let n = self.d.n_mu;
        let mut mu = vec![0.0; n];
        let mut nu = vec![0.0; self.d.n_nu];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < n {
                mu[j] += self.xb[r];
            } else if j < 2 * n {
                mu[j - n] -= self.xb[r];
            } else if j < 2 * n + self.d.n_nu {
                nu[j - 2 * n] = self.xb[r];
            }
        }
        (primal, mu, nu)
    }
}

/// Checks the optimality certificate: primal feasibility, dual feasibility,
/// and the duality gap.
fn certify(
    lp: &LinearProgram,
    primal: &[f64],
    mu: &[f64],
    nu: &[f64],
    opts: &SolveOptions,
) -> Result<()> {
    let (primal_viol, row) = lp.max_violation(primal);
    if primal_viol > opts.feas_tol {
        return Err(Error::SolverCertification(format!(
            "primal violation {primal_viol} in row {row}"
        )));
    }
    let n = lp.n();
    if let Some(&worst) = nu
        .iter()
        .filter(|v| **v < 0.0)
        .min_by(|a, b| a.partial_cmp(b).expect("finite"))
    {
        if worst < -opts.feas_tol {
            return Err(Error::SolverCertification(format!(
                "negative dual multiplier {worst}"
            )));
        }
    }
    // Dual feasibility: E^T mu - G^T nu <= c, componentwise.
    let mut lhs = vec![0.0; lp.var_count()];
    for x in 0..n {
        for y in 0..n {
            lhs[x * n + y] = mu[x];
        }
    }
    for (k, r) in lp.ineq_rows().iter().enumerate() {
        lhs[r.plus] -= nu[k];
        lhs[r.minus] += r.mult * nu[k];
    }
    let mut dual_viol = f64::NEG_INFINITY;
    for (v, &l) in lhs.iter().enumerate() {
        dual_viol = dual_viol.max(l - lp.objective()[v]);
    }
    if dual_viol > opts.opt_tol {
        return Err(Error::SolverCertification(format!(
            "dual violation {dual_viol}"
        )));
    }
    let primal_obj = lp.objective_value(primal);
    let dual_obj: f64 = mu.iter().sum();
    let gap = (primal_obj - dual_obj).abs();
    if gap > opts.opt_tol * (1.0 + primal_obj.abs()) {
        return Err(Error::SolverCertification(format!(
            "duality gap {gap} (primal {primal_obj}, dual {dual_obj})"
        )));
    }
    Ok(())
}

/// Solves the program with the builtin revised simplex.
///
/// `status = Optimal` comes with a verified certificate: the returned point
/// satisfies every row within `feas_tol` and matches a feasible dual point's
/// objective within `opt_tol`. On hitting the iteration limit the solver
/// returns the best feasible point it can name (the current primal estimate
/// if it happens to be feasible, otherwise the uniform mechanism) under
/// `status = IterationLimit`.
pub fn solve_builtin(lp: &LinearProgram, opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    let start = std::time::Instant::now();
    if lp.n() == 1 {
        // One location: the only channel is the trivial one.
        let point = vec![1.0];
        let report = SolveReport {
            status: SolveStatus::Optimal,
            objective_value: 0.0,
            iterations: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            solver: SolverKind::Builtin,
        };
        return Ok((point, report));
    }

    let mut s = Simplex::new(lp);
    let m = s.d.rows;
    let mut u = vec![0.0; m];
    let mut confirmations = 0usize;
    // Anti-cycling state: Dantzig pricing normally, Bland's rule while a
    // degenerate stall lasts, permanently after too many stalls.
    let mut bland_mode = false;
    let mut degenerate_streak = 0usize;
    let mut stalls = 0usize;

    loop {
        if s.iterations >= opts.max_iters {
            s.refactor()?;
            s.compute_y();
            let (primal, _, _) = s.extract();
            let (viol, _) = lp.max_violation(&primal);
            let point = if viol <= opts.feas_tol {
                primal
            } else {
                lp.uniform_point()
            };
            let report = SolveReport {
                status: SolveStatus::IterationLimit,
                objective_value: lp.objective_value(&point),
                iterations: s.iterations,
                wall_time_s: start.elapsed().as_secs_f64(),
                solver: SolverKind::Builtin,
            };
            return Ok((point, report));
        }

        s.compute_y();
        let enter = match s.price(bland_mode) {
            Some(j) => j,
            None => {
                // Confirm on a freshly factorized basis before certifying.
                s.refactor()?;
                s.compute_y();
                match s.price(bland_mode) {
                    None => {
                        let (primal, mu, nu) = s.extract();
                        certify(lp, &primal, &mu, &nu, opts)?;
                        let report = SolveReport {
                            status: SolveStatus::Optimal,
                            objective_value: lp.objective_value(&primal),
                            iterations: s.iterations,
                            wall_time_s: start.elapsed().as_secs_f64(),
                            solver: SolverKind::Builtin,
                        };
                        return Ok((primal, report));
                    }
                    Some(j) if confirmations < 8 => {
                        confirmations += 1;
                        j
                    }
                    Some(_) => {
                        return Err(Error::SolverCertification(
                            "optimality would not stabilize under refactorization".into(),
                        ))
                    }
                }
            }
        };

        s.direction(enter, &mut u);
        let leave = match s.ratio_test(&u) {
            Some(r) => r,
            None => {
                // Unbounded dual = infeasible primal. Cannot happen for
                // well-formed programs (the uniform mechanism is feasible);
                // surfaced via the status channel for honesty.
                let report = SolveReport {
                    status: SolveStatus::Infeasible,
                    objective_value: f64::NAN,
                    iterations: s.iterations,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    solver: SolverKind::Builtin,
                };
                return Ok((Vec::new(), report));
            }
        };
        let theta = s.xb[leave].max(0.0) / u[leave];
        s.pivot(leave, enter, &u);
        s.iterations += 1;
        if theta <= PIVOT_TOL {
            degenerate_streak += 1;
            if degenerate_streak >= 300 && !bland_mode {
                bland_mode = true;
                stalls += 1;
            }
        } else {
            degenerate_streak = 0;
            if bland_mode && stalls < 64 {
                bland_mode = false;
            }
        }
        if s.iterations.is_multiple_of(opts.refactor_every) {
            s.refactor()?;
        }
    }
}
