//! Location sets, the Euclidean metric, grid generation, covering radius,
//! and prior distributions over locations.
//!
//! A [`LocationSet`] is an ordered list of named planar points. The order is
//! load-bearing: index `i` in every matrix, constraint row, and mechanism
//! downstream refers to point `i` here, for the lifetime of the set.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance on the sum of a prior's probabilities.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// Accepted deviation from 1 for the raw sum of a prior file before
/// normalization.
pub const PRIOR_FILE_SUM_TOL: f64 = 1e-9;

/// An indexed set of planar locations with a Euclidean metric.
///
/// Invariants enforced on construction: at least one point, unique ids,
/// finite coordinates, and no two points sharing coordinates (so
/// `distance(a, b) = 0` iff `a == b`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    ids: Vec<String>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Grid spacing, recorded when the set was produced by [`build_grid`].
    spacing: Option<f64>,
    grid_dims: Option<(usize, usize)>,
}

impl LocationSet {
    /// Builds a set from `(id, x, y)` triples.
    pub fn new(points: Vec<(String, f64, f64)>) -> Result<Self> {
        Self::with_spacing(points, None, None)
    }

    fn with_spacing(
        points: Vec<(String, f64, f64)>,
        spacing: Option<f64>,
        grid_dims: Option<(usize, usize)>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyLocationSet);
        }
        let mut seen = HashMap::new();
        for (i, (id, x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFiniteCoordinate(id.clone()));
            }
            if seen.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        // Detect coincident points via a coordinate sort.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| {
            (points[i].1, points[i].2)
                .partial_cmp(&(points[j].1, points[j].2))
                .expect("finite coordinates")
        });
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            if points[a].1 == points[b].1 && points[a].2 == points[b].2 {
                return Err(Error::DuplicatePoint {
                    a: points[a].0.clone(),
                    b: points[b].0.clone(),
                });
            }
        }
        let ids = points.iter().map(|p| p.0.clone()).collect();
        let xs = points.iter().map(|p| p.1).collect();
        let ys = points.iter().map(|p| p.2).collect();
        Ok(Self {
            ids,
            xs,
            ys,
            spacing,
            grid_dims,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn coords(&self, i: usize) -> (f64, f64) {
        (self.xs[i], self.ys[i])
    }

    /// Grid spacing `u`, present only for grid-generated sets.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    /// Euclidean distance between locations `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> Result<f64> {
        let n = self.len();
        for &i in &[a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        Ok(self.dist_unchecked(a, b))
    }

    #[inline]
    fn dist_unchecked(&self, a: usize, b: usize) -> f64 {
        let dx = self.xs[a] - self.xs[b];
        let dy = self.ys[a] - self.ys[b];
        (dx * dx + dy * dy).sqrt()
    }

    /// Full pairwise distance matrix in row-major order (`n * n` entries).
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let v = self.dist_unchecked(a, b);
                d[a * n + b] = v;
                d[b * n + a] = v;
            }
        }
        d
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                best = best.max(self.dist_unchecked(a, b));
            }
        }
        best
    }

    /// Covering radius rho: the largest distance from any point of the convex
    /// hull to its nearest location.
    ///
    /// Defined only for grid-generated sets, where the farthest hull points
    /// are the cell centers at `spacing / sqrt(2)` from the corners of their
    /// cell (degenerate grids: 0 for a single point, `spacing / 2` for a
    /// single row or column, whose hull is a segment). Arbitrary point clouds
    /// need a user-supplied rho.
    pub fn covering_radius(&self) -> Result<f64> {
        let spacing = self.spacing.ok_or(Error::CoveringRadiusUnavailable)?;
        let (rows, cols) = self.grid_dims.expect("grid sets record dimensions");
        Ok(match (rows, cols) {
            (1, 1) => 0.0,
            (1, _) | (_, 1) => spacing / 2.0,
            _ => spacing / std::f64::consts::SQRT_2,
        })
    }

    /// Writes the set as `id,x,y` CSV.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("id,x,y\n");
        for i in 0..self.len() {
            writeln!(out, "{},{},{}", self.ids[i], self.xs[i], self.ys[i]).expect("string write");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads a set from `id,x,y` CSV. The result carries no spacing, so
    /// [`covering_radius`](Self::covering_radius) is unavailable on it.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "id,x,y" => {}
            other => {
                return Err(Error::Malformed {
                    what: "locations CSV",
                    line: 1,
                    detail: format!("expected header \"id,x,y\", got {:?}", other.map(|o| o.1)),
                })
            }
        }
        let mut points = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (id, x, y) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(id), Some(x), Some(y), None) => (id, x, y),
                _ => {
                    return Err(Error::Malformed {
                        what: "locations CSV",
                        line: idx + 1,
                        detail: format!("expected 3 fields, got {:?}", line),
                    })
                }
            };
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::Malformed {
                    what: "locations CSV",
                    line: idx + 1,
                    detail: format!("bad float {:?}", s),
                })
            };
            points.push((id.trim().to_string(), parse(x)?, parse(y)?));
        }
        Self::new(points)
    }
}

/// Builds a `rows x cols` grid with the given spacing.
///
/// Point `(i, j)` (row `i`, column `j`) sits at `(j * spacing, i * spacing)`
/// with id `"i_j"`; indices are row-major, which is the canonical matrix
/// order everywhere downstream.
pub fn build_grid(rows: usize, cols: usize, spacing: f64) -> Result<LocationSet> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidGrid { rows, cols });
    }
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::InvalidSpacing(spacing));
    }
    let mut points = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            points.push((format!("{i}_{j}"), j as f64 * spacing, i as f64 * spacing));
        }
    }
    LocationSet::with_spacing(points, Some(spacing), Some((rows, cols)))
}

/// A probability distribution over a location set, aligned to its indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    probs: Vec<f64>,
}

impl Prior {
    /// Validates entries (nonnegative, summing to 1 within [`PRIOR_SUM_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyLocationSet);
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativePriorEntry {
                    id: i.to_string(),
                    prob: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::PriorNotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The uniform prior over `n` locations.
pub fn uniform_prior(n: usize) -> Result<Prior> {
    if n == 0 {
        return Err(Error::EmptyLocationSet);
    }
    Prior::new(vec![1.0 / n as f64; n])
}

/// Loads a prior from `id,prob` CSV and aligns it to `locs`.
///
/// The file's ids must cover the location set exactly. Entries must be
/// nonnegative and sum to 1 within [`PRIOR_FILE_SUM_TOL`]; the stored prior
/// is renormalized so its sum is exact to machine precision.
pub fn load_prior(path: &Path, locs: &LocationSet) -> Result<Prior> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "id,prob" => {}
        other => {
            return Err(Error::Malformed {
                what: "prior CSV",
                line: 1,
                detail: format!("expected header \"id,prob\", got {:?}", other.map(|o| o.1)),
            })
        }
    }
    let mut by_id: HashMap<String, f64> = HashMap::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (id, prob) = match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(p), None) => (id.trim().to_string(), p),
            _ => {
                return Err(Error::Malformed {
                    what: "prior CSV",
                    line: idx + 1,
                    detail: format!("expected 2 fields, got {:?}", line),
                })
            }
        };
        let prob: f64 = prob.trim().parse().map_err(|_| Error::Malformed {
            what: "prior CSV",
            line: idx + 1,
            detail: format!("bad float {:?}", prob),
        })?;
        if prob < 0.0 || !prob.is_finite() {
            return Err(Error::NegativePriorEntry { id, prob });
        }
        if by_id.insert(id.clone(), prob).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    let missing: Vec<String> = locs
        .ids()
        .iter()
        .filter(|id| !by_id.contains_key(*id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::PriorMissingIds(missing));
    }
    if by_id.len() > locs.len() {
        let mut extra: Vec<String> = by_id
            .keys()
            .filter(|id| !locs.ids().contains(id))
            .cloned()
            .collect();
        extra.sort();
        return Err(Error::PriorExtraIds(extra));
    }
    let mut probs: Vec<f64> = locs.ids().iter().map(|id| by_id[id]).collect();
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PRIOR_FILE_SUM_TOL {
        return Err(Error::PriorNotNormalized { sum });
    }
    for p in &mut probs {
        *p /= sum;
    }
    Prior::new(probs)
}
