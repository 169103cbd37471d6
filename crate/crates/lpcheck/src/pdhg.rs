//! First-order LP solver: primal-dual hybrid gradient with Ruiz
//! equilibration, fixed step sizes from a power-method operator-norm
//! estimate, running averages, and adaptive restarts. Handles programs far
//! beyond what a dense tableau can hold; accuracy is governed by KKT
//! residual targets rather than basis arithmetic.

use crate::lpfile::{Cmp, LpProblem};
use crate::LpcheckError;

#[derive(Debug, Clone)]
pub struct PdhgOptions {
    pub max_iters: usize,
    pub check_every: usize,
    /// Relative primal and dual residual target.
    pub feas_tol: f64,
    /// Relative duality-gap target.
    pub gap_tol: f64,
}

impl Default for PdhgOptions {
    fn default() -> Self {
        Self {
            max_iters: 600_000,
            check_every: 250,
            feas_tol: 1e-7,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdhgSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub rel_gap: f64,
}

/// Compressed sparse rows.
struct Csr {
    rows: usize,
    cols: usize,
    row_start: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let mut acc = 0.0;
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k] as usize];
            }
            *o = acc;
        }
    }

    fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.cols {
            counts[i + 1] += counts[i];
        }
        let row_start = counts.clone();
        let mut cursor = counts;
        let nnz = self.vals.len();
        let mut col_idx = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        for r in 0..self.rows {
            for k in self.row_start[r]..self.row_start[r + 1] {
                let c = self.col_idx[k] as usize;
                let dst = cursor[c];
                cursor[c] += 1;
                col_idx[dst] = r as u32;
                vals[dst] = self.vals[k];
            }
        }
        Csr {
            rows: self.cols,
            cols: self.rows,
            row_start,
            col_idx,
            vals,
        }
    }
}

struct Scaled {
    k: Csr,
    kt: Csr,
    c: Vec<f64>,
    q: Vec<f64>,
    /// Row is an inequality (multiplier projected to >= 0).
    is_ineq: Vec<bool>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    // Original (unscaled) data for KKT checks.
    c0: Vec<f64>,
    q0: Vec<f64>,
}

fn build(lp: &LpProblem) -> Result<Scaled, LpcheckError> {
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
    let mut row_start = Vec::with_capacity(m + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    let mut q = Vec::with_capacity(m);
    let mut is_ineq = Vec::with_capacity(m);
    row_start.push(0);
    for row in &lp.rows {
        // Normalize Ge to Le by negation; Eq stays.
        let s = if row.cmp == Cmp::Ge { -1.0 } else { 1.0 };
        for &(v, coef) in &row.terms {
            col_idx.push(v as u32);
            vals.push(s * coef);
        }
        row_start.push(vals.len());
        q.push(s * row.rhs);
        is_ineq.push(row.cmp != Cmp::Eq);
    }
    let sense = if lp.minimize { 1.0 } else { -1.0 };
    let c0: Vec<f64> = lp.objective.iter().map(|v| sense * v).collect();
    let q0 = q.clone();

    // Ruiz equilibration.
    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    let mut k = Csr {
        rows: m,
        cols: n,
        row_start,
        col_idx,
        vals,
    };
    for _ in 0..10 {
        let mut row_max = vec![0.0f64; m];
        let mut col_max = vec![0.0f64; n];
        for (r, rm) in row_max.iter_mut().enumerate() {
            for idx in k.row_start[r]..k.row_start[r + 1] {
                let a = k.vals[idx].abs();
                let c = k.col_idx[idx] as usize;
                *rm = rm.max(a);
                col_max[c] = col_max[c].max(a);
            }
        }
        let rs: Vec<f64> = row_max
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        let cs: Vec<f64> = col_max
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        for (r, &rsv) in rs.iter().enumerate() {
            for idx in k.row_start[r]..k.row_start[r + 1] {
                k.vals[idx] *= rsv * cs[k.col_idx[idx] as usize];
            }
        }
        for (scale, rsv) in row_scale.iter_mut().zip(&rs) {
            *scale *= rsv;
        }
        for (scale, csv) in col_scale.iter_mut().zip(&cs) {
            *scale *= csv;
        }
    }
    let c: Vec<f64> = (0..n).map(|v| c0[v] * col_scale[v]).collect();
    let q: Vec<f64> = (0..m).map(|r| q0[r] * row_scale[r]).collect();
    let kt = k.transpose();
    Ok(Scaled {
        k,
        kt,
        c,
        q,
        is_ineq,
        row_scale,
        col_scale,
        c0,
        q0,
    })
}

/// Power-method estimate of the spectral norm of the scaled matrix.
fn operator_norm(s: &Scaled) -> f64 {
    let n = s.k.cols;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut kv = vec![0.0; s.k.rows];
    let mut ktkv = vec![0.0; n];
    let mut lambda: f64 = 1.0;
    for _ in 0..60 {
        s.k.mul(&v, &mut kv);
        s.kt.mul(&kv, &mut ktkv);
        let norm = ktkv.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return 1.0;
        }
        lambda = norm;
        for i in 0..n {
            v[i] = ktkv[i] / norm;
        }
    }
    lambda.sqrt().max(1e-12)
}

struct Kkt {
    primal_res: f64,
    dual_res: f64,
    rel_gap: f64,
    objective: f64,
}

fn score(k: &Kkt) -> f64 {
    k.primal_res.max(k.dual_res).max(k.rel_gap)
}

/// KKT residuals of the UNSCALED problem at scaled iterates.
fn kkt(s: &Scaled, x_s: &[f64], y_s: &[f64], work_m: &mut [f64], work_n: &mut [f64]) -> Kkt {
    let n = s.k.cols;
    let m = s.k.rows;
    // Unscale: x = Dc x_s, y = Dr y_s.
    let x: Vec<f64> = (0..n).map(|i| x_s[i] * s.col_scale[i]).collect();
    let y: Vec<f64> = (0..m).map(|r| y_s[r] * s.row_scale[r]).collect();
    // Primal residual on original rows: K0 x - q0, where K0 = Dr^-1 K Dc^-1.
    // Compute K (x_s scaled back through Dc^-1 Dc = identity): easiest is
    // K_scaled * x_s = Dr K0 Dc * x_s and then divide by Dr.
    s.k.mul(x_s, work_m);
    let qn = 1.0 + s.q0.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut primal = 0.0f64;
    for (r, w) in work_m.iter().enumerate().take(m) {
        let ax = w / s.row_scale[r];
        let resid = ax - s.q0[r];
        let v = if s.is_ineq[r] { resid.max(0.0) } else { resid.abs() };
        primal = primal.max(v);
    }
    // Dual residual: slack = c0 + K0^T y must be >= 0.
    s.kt.mul(y_s, work_n);
    let cn = 1.0 + s.c0.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut dual = 0.0f64;
    for (i, w) in work_n.iter().enumerate().take(n) {
        let kty = w / s.col_scale[i];
        let slack = s.c0[i] + kty;
        dual = dual.max((-slack).max(0.0));
    }
    let pobj: f64 = (0..n).map(|i| s.c0[i] * x[i]).sum();
    let dobj: f64 = -(0..m).map(|r| s.q0[r] * y[r]).sum::<f64>();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    Kkt {
        primal_res: primal / qn,
        dual_res: dual / cn,
        rel_gap: gap,
        objective: pobj,
    }
}

pub fn solve(lp: &LpProblem, opts: &PdhgOptions) -> Result<PdhgSolution, LpcheckError> {
    let s = build(lp)?;
    let n = s.k.cols;
    let m = s.k.rows;
    let sigma_max = operator_norm(&s);
    let cnorm = s.c.iter().map(|a| a * a).sum::<f64>().sqrt();
    let qnorm = s.q.iter().map(|a| a * a).sum::<f64>().sqrt();
    let weight = if cnorm > 1e-12 && qnorm > 1e-12 {
        qnorm / cnorm
    } else {
        1.0
    };
    let tau = 0.98 * weight / sigma_max;
    let sig = 0.98 / (weight * sigma_max);

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut x_next = vec![0.0; n];
    let mut x_bar = vec![0.0; n];
    let mut kty = vec![0.0; m.max(n)];
    let mut kx = vec![0.0; m];
    let mut x_sum = vec![0.0; n];
    let mut y_sum = vec![0.0; m];
    let mut window = 0usize;
    let mut work_m = vec![0.0; m];
    let mut work_n = vec![0.0; n];

    let mut score_at_restart = f64::INFINITY;
    let mut best_x = x.clone();
    let mut best_score = f64::INFINITY;
    let mut best_kkt = kkt(&s, &x, &y, &mut work_m, &mut work_n);
    let mut iterations = 0usize;

    while iterations < opts.max_iters {
        // x update.
        s.kt.mul(&y, &mut kty[..n]);
        for i in 0..n {
            let v = x[i] - tau * (s.c[i] + kty[i]);
            x_next[i] = if v > 0.0 { v } else { 0.0 };
            x_bar[i] = 2.0 * x_next[i] - x[i];
        }
        // y update.
        s.k.mul(&x_bar, &mut kx);
        for r in 0..m {
            let v = y[r] + sig * (kx[r] - s.q[r]);
            y[r] = if s.is_ineq[r] && v < 0.0 { 0.0 } else { v };
        }
        std::mem::swap(&mut x, &mut x_next);
        for i in 0..n {
            x_sum[i] += x[i];
        }
        for r in 0..m {
            y_sum[r] += y[r];
        }
        window += 1;
        iterations += 1;

        if iterations.is_multiple_of(opts.check_every) {
            let cur = kkt(&s, &x, &y, &mut work_m, &mut work_n);
            let inv = 1.0 / window as f64;
            let x_avg: Vec<f64> = x_sum.iter().map(|v| v * inv).collect();
            let y_avg: Vec<f64> = y_sum.iter().map(|v| v * inv).collect();
            let avg = kkt(&s, &x_avg, &y_avg, &mut work_m, &mut work_n);

            let (cand_x, cand_y, cand) = if score(&avg) < score(&cur) {
                (x_avg, y_avg, avg)
            } else {
                (x.clone(), y.clone(), cur)
            };
            let sc = score(&cand);
            if sc < best_score {
                best_score = sc;
                best_x = cand_x.clone();
                best_kkt = cand;
            }
            if best_kkt.primal_res <= opts.feas_tol
                && best_kkt.dual_res <= opts.feas_tol
                && best_kkt.rel_gap <= opts.gap_tol
            {
                break;
            }
            // Restart from the candidate on sufficient decay, or when the
            // window has grown stale.
            if sc <= 0.2 * score_at_restart || (window >= 20_000 && sc < score_at_restart) {
                x = cand_x;
                y = cand_y;
                x_sum.iter_mut().for_each(|v| *v = 0.0);
                y_sum.iter_mut().for_each(|v| *v = 0.0);
                window = 0;
                score_at_restart = sc;
            }
        }
    }

    let x_out: Vec<f64> = (0..n).map(|i| best_x[i] * s.col_scale[i]).collect();
    Ok(PdhgSolution {
        objective: best_kkt.objective,
        x: x_out,
        iterations,
        primal_res: best_kkt.primal_res,
        dual_res: best_kkt.dual_res,
        rel_gap: best_kkt.rel_gap,
    })
}
