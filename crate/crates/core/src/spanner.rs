//! Constraint-graph construction, exact dilation, and privacy constraint
//! sets.
//!
//! The exact privacy definition needs one inequality per ordered location
//! pair per reported location, `n^2 (n-1)` rows in total. Connecting only
//! pairs within a radius `R` and tightening each edge constraint by the
//! graph's dilation factor `delta` yields `|edges| * n` rows that imply all
//! of the originals: along a shortest path `a = x_0, ..., x_k = b`, the edge
//! constraints chain to
//! `p(y|a) <= exp(eps * sp(a,b) / delta) * p(y|b) <= exp(eps * d(a,b)) * p(y|b)`
//! because `sp(a,b) <= delta * d(a,b)` by definition of `delta`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::LocationSet;

/// Directed edges between locations within radius `R`.
///
/// Closed under reversal and free of self-loops by construction.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    /// Directed pairs, sorted by `(a, b)`.
    edges: Vec<(usize, usize)>,
    radius: f64,
    /// Set when the set was built over a grid and `R < 2 * rho`, the density
    /// bound below which the radius cannot be guaranteed to connect every
    /// pair.
    below_density_bound: bool,
}

impl EdgeSet {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// True when the generating radius was below the `R >= 2 * rho`
    /// connectivity bound (only known for grid-generated sets).
    pub fn below_density_bound(&self) -> bool {
        self.below_density_bound
    }
}

/// All ordered pairs `(a, b)`, `a != b`, with `d(a, b) <= radius`.
///
/// An empty edge set is legal here; connectivity is what [`dilation`]
/// checks. When the set is grid-generated and `radius < 2 * rho`, the result
/// carries a warning indicator (see [`EdgeSet::below_density_bound`]).
pub fn build_edges(locs: &LocationSet, radius: f64) -> Result<EdgeSet> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    let n = locs.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && locs.distance(a, b)? <= radius {
                edges.push((a, b));
            }
        }
    }
    let below = match locs.covering_radius() {
        Ok(rho) => radius < 2.0 * rho,
        Err(_) => false,
    };
    Ok(EdgeSet {
        edges,
        radius,
        below_density_bound: below,
    })
}

/// The exact dilation of an edge graph: shortest-path lengths and the
/// largest stretch over all location pairs.
#[derive(Debug, Clone)]
pub struct DilationResult {
    delta: f64,
    witness: (usize, usize),
    /// All-pairs shortest-path lengths, row-major `n * n`, Euclidean edge
    /// weights.
    sp_table: Vec<f64>,
    n: usize,
}

impl DilationResult {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// A pair attaining the maximum stretch `sp(a, b) / d(a, b)`.
    pub fn witness(&self) -> (usize, usize) {
        self.witness
    }

    pub fn shortest_path(&self, a: usize, b: usize) -> f64 {
        self.sp_table[a * self.n + b]
    }

    pub fn sp_table(&self) -> &[f64] {
        &self.sp_table
    }
}

/// Computes the exact dilation `delta = max_{a != b} sp(a, b) / d(a, b)` of
/// the edge graph via Floyd-Warshall with Euclidean edge weights.
///
/// Errors with a witness pair if the graph is disconnected (the chaining
/// argument needs a path between every pair).
pub fn dilation(locs: &LocationSet, edges: &EdgeSet) -> Result<DilationResult> {
    if edges.is_empty() && locs.len() > 1 {
        return Err(Error::EmptyEdgeSet);
    }
    let n = locs.len();
    let mut sp = vec![f64::INFINITY; n * n];
    for i in 0..n {
        sp[i * n + i] = 0.0;
    }
    for &(a, b) in edges.edges() {
        sp[a * n + b] = locs.distance(a, b)?;
    }
    for k in 0..n {
        for i in 0..n {
            let ik = sp[i * n + k];
            if !ik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = ik + sp[k * n + j];
                if via < sp[i * n + j] {
                    sp[i * n + j] = via;
                }
            }
        }
    }
    let mut delta = 1.0f64;
    let mut witness = (0, usize::from(n > 1));
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let s = sp[a * n + b];
            if !s.is_finite() {
                return Err(Error::Disconnected {
                    a: locs.id(a).to_string(),
                    b: locs.id(b).to_string(),
                });
            }
            let stretch = s / locs.distance(a, b)?;
            if stretch > delta {
                delta = stretch;
                witness = (a, b);
            }
        }
    }
    Ok(DilationResult {
        delta,
        witness,
        sp_table: sp,
        n,
    })
}

/// Whether a constraint set is the full definition or the radius-reduced
/// form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Exact,
    Reduced,
}

/// One privacy inequality `p(y|a) <= mult * p(y|b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRow {
    pub a: usize,
    pub b: usize,
    pub y: usize,
    pub mult: f64,
}

/// A set of directed privacy inequalities, sorted by `(a, b, y)`.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    rows: Vec<ConstraintRow>,
    epsilon: f64,
    kind: ConstraintKind,
    delta: f64,
    n: usize,
}

impl ConstraintSet {
    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Location count the rows index into.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Writes the rows as `a,b,y,mult` CSV in the deterministic `(a, b, y)`
    /// order.
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("a,b,y,mult\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.a, r.b, r.y, r.mult).expect("string write");
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Number of rows the exact constraint set has for `n` locations, without
/// materializing it: `n^2 (n - 1)`.
pub fn exact_row_count(n: u64) -> u64 {
    n * n * (n - 1)
}

/// Number of rows the reduced constraint set has: `|edges| * n`.
pub fn reduced_row_count(edge_count: u64, n: u64) -> u64 {
    edge_count * n
}

/// The full definition: for every ordered pair `(a, b)` and every report
/// `y`, `p(y|a) <= exp(eps * d(a, b)) * p(y|b)`.
pub fn exact_constraints(locs: &LocationSet, epsilon: f64) -> Result<ConstraintSet> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let n = locs.len();
    let mut rows = Vec::with_capacity(n * n * n.saturating_sub(1));
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mult = (epsilon * locs.distance(a, b)?).exp();
            for y in 0..n {
                rows.push(ConstraintRow { a, b, y, mult });
            }
        }
    }
    Ok(ConstraintSet {
        rows,
        epsilon,
        kind: ConstraintKind::Exact,
        delta: 1.0,
        n,
    })
}

/// The reduced set: one row per `(edge, y)`, with each edge constraint
/// tightened by `delta`: `p(y|a) <= exp(eps * d(a, b) / delta) * p(y|b)`.
///
/// `delta` must come from [`dilation`] on these edges (or be an externally
/// supplied upper bound on it) for the reduction to imply the exact set.
pub fn reduced_constraints(
    locs: &LocationSet,
    edges: &EdgeSet,
    delta: f64,
    epsilon: f64,
) -> Result<ConstraintSet> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !delta.is_finite() || delta < 1.0 {
        return Err(Error::InvalidDelta(delta));
    }
    let n = locs.len();
    let mut rows = Vec::with_capacity(edges.len() * n);
    for &(a, b) in edges.edges() {
        let mult = (epsilon * locs.distance(a, b)? / delta).exp();
        for y in 0..n {
            rows.push(ConstraintRow { a, b, y, mult });
        }
    }
    Ok(ConstraintSet {
        rows,
        epsilon,
        kind: ConstraintKind::Reduced,
        delta,
        n,
    })
}

/// Outcome of checking that chained edge constraints entail every original
/// pair constraint.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    /// Max over ordered pairs of `(eps/delta) * sp(a,b) - eps * d(a,b)`.
    pub max_violation: f64,
    pub worst_pair: (usize, usize),
    /// Pairs whose chained exponent exceeds the direct one beyond tolerance.
    pub violations: Vec<(usize, usize, f64)>,
    pub pairs_checked: usize,
}

impl CertificateReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tolerance for the chaining check in [`implication_certificate`].
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Checks, for every ordered pair `(a, b)`, that the product of the reduced
/// multipliers along the shortest path is bounded by the exact multiplier:
/// `(eps / delta) * sp(a, b) <= eps * d(a, b) + tol`.
///
/// A violated pair indicates a dilation bug (or a `delta` smaller than the
/// true dilation of these edges).
pub fn implication_certificate(
    locs: &LocationSet,
    dil: &DilationResult,
    delta: f64,
    epsilon: f64,
) -> Result<CertificateReport> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !delta.is_finite() || delta < 1.0 {
        return Err(Error::InvalidDelta(delta));
    }
    let n = locs.len();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_pair = (0, usize::from(n > 1));
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            pairs_checked += 1;
            let chained = epsilon / delta * dil.shortest_path(a, b);
            let direct = epsilon * locs.distance(a, b)?;
            let v = chained - direct;
            if v > max_violation {
                max_violation = v;
                worst_pair = (a, b);
            }
            if v > CERTIFICATE_TOL {
                violations.push((a, b, v));
            }
        }
    }
    if pairs_checked == 0 {
        max_violation = 0.0;
    }
    Ok(CertificateReport {
        max_violation,
        worst_pair,
        violations,
        pairs_checked,
    })
}
