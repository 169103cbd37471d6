//! The obfuscation channel: construction from a solver point, brute-force
//! privacy verification against the original definition, utility
//! evaluation, sampling, and JSON persistence.

use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LocationSet, Prior};

/// Entries this far outside `[0, 1]` are treated as solver noise and
/// clamped; anything larger is a solver failure, not noise.
pub const CLAMP_TOL: f64 = 1e-7;
/// Columns whose largest entry is below this are treated as structurally
/// zero. In a feasible point the privacy rows tie all entries of a column
/// within a factor `exp(eps * diameter)` of each other, so a column is
/// either genuinely active (every entry well above this) or pure solver
/// noise around an exact zero.
pub const COLUMN_FLOOR: f64 = 1e-9;
/// Accepted deviation of a raw row sum from 1 before renormalization.
pub const ROW_SUM_TOL: f64 = 1e-6;
/// Row-sum tolerance enforced on stored mechanisms.
pub const STORED_ROW_SUM_TOL: f64 = 1e-9;

/// A row-stochastic channel: row `x` is the distribution of the reported
/// location given true location `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    n: usize,
    matrix: Vec<f64>,
    epsilon_declared: f64,
    ids: Vec<String>,
}

impl Mechanism {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon_declared(&self) -> f64 {
        self.epsilon_declared
    }

    /// Ids of the location set this mechanism is bound to.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.n..(x + 1) * self.n]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    fn check_bound(&self, locs: &LocationSet) -> Result<()> {
        if self.n != locs.len() || self.ids != locs.ids() {
            return Err(Error::LocationSetMismatch);
        }
        Ok(())
    }

    fn validate(n: usize, ids: &[String], matrix: &[f64], epsilon: f64) -> Result<()> {
        if n == 0 || ids.len() != n || matrix.len() != n * n || !epsilon.is_finite() {
            return Err(Error::Malformed {
                what: "mechanism",
                line: 0,
                detail: "dimension fields disagree".into(),
            });
        }
        for (i, &v) in matrix.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::NotAChannel {
                    x: i / n,
                    y: i % n,
                    value: v,
                });
            }
        }
        for x in 0..n {
            let sum: f64 = matrix[x * n..(x + 1) * n].iter().sum();
            if (sum - 1.0).abs() > STORED_ROW_SUM_TOL {
                return Err(Error::RowSumInvalid { x, sum });
            }
        }
        Ok(())
    }
}

/// Builds a mechanism from a solver point in canonical variable order.
///
/// Entries within [`CLAMP_TOL`] of `[0, 1]` are clamped, columns that are
/// noise around an exact zero (largest entry below [`COLUMN_FLOOR`]) are
/// zeroed, and each row is renormalized. Entries further out of range, or
/// row sums off by more than [`ROW_SUM_TOL`], reject the point as "not a
/// channel".
pub fn from_solution(
    solution: &[f64],
    locs: &LocationSet,
    epsilon: f64,
) -> Result<Mechanism> {
    let n = locs.len();
    if solution.len() != n * n {
        return Err(Error::DimensionMismatch {
            prior: solution.len(),
            locs: n * n,
        });
    }
    let mut matrix = Vec::with_capacity(n * n);
    for (i, &v) in solution.iter().enumerate() {
        if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&v) {
            return Err(Error::NotAChannel {
                x: i / n,
                y: i % n,
                value: v,
            });
        }
        matrix.push(v.clamp(0.0, 1.0));
    }
    for y in 0..n {
        let col_max = (0..n).map(|x| matrix[x * n + y]).fold(0.0, f64::max);
        if col_max <= COLUMN_FLOOR {
            for x in 0..n {
                matrix[x * n + y] = 0.0;
            }
        }
    }
    for x in 0..n {
        let row = &mut matrix[x * n..(x + 1) * n];
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSumInvalid { x, sum });
        }
        for v in row {
            *v /= sum;
        }
    }
    let mech = Mechanism {
        n,
        matrix,
        epsilon_declared: epsilon,
        ids: locs.ids().to_vec(),
    };
    Mechanism::validate(n, &mech.ids, &mech.matrix, epsilon)?;
    Ok(mech)
}

/// Identity channel over `locs` (always reports the true location). Valid
/// as a channel; fails privacy verification for any finite epsilon.
pub fn identity_mechanism(locs: &LocationSet, epsilon: f64) -> Mechanism {
    let n = locs.len();
    let mut matrix = vec![0.0; n * n];
    for x in 0..n {
        matrix[x * n + x] = 1.0;
    }
    Mechanism {
        n,
        matrix,
        epsilon_declared: epsilon,
        ids: locs.ids().to_vec(),
    }
}

/// Uniform channel over `locs`.
pub fn uniform_mechanism(locs: &LocationSet, epsilon: f64) -> Mechanism {
    let n = locs.len();
    Mechanism {
        n,
        matrix: vec![1.0 / n as f64; n * n],
        epsilon_declared: epsilon,
        ids: locs.ids().to_vec(),
    }
}

/// Result of the exhaustive privacy check.
#[derive(Debug, Clone)]
pub struct PrivacyReport {
    pub satisfied: bool,
    /// Max over ordered triples of
    /// `ln p(y|a) - ln p(y|b) - eps * d(a, b)`, floored at zero;
    /// infinite when some `p(y|a) > 0` has `p(y|b) = 0`.
    pub max_log_violation: f64,
    /// Triple attaining the maximum (absent only for a single location,
    /// where there is nothing to check).
    pub worst_triple: Option<(usize, usize, usize)>,
    pub triples_checked: u64,
}

/// Exhaustively checks the privacy definition on all `n^2 (n-1)` ordered
/// triples `(a, b, y)`, `a != b`.
///
/// Zero handling: `p(y|a) = 0` never violates; `p(y|a) > 0` with
/// `p(y|b) = 0` is an unconditional (infinite) violation.
pub fn verify_privacy(
    mech: &Mechanism,
    locs: &LocationSet,
    epsilon: f64,
    tol: f64,
) -> Result<PrivacyReport> {
    mech.check_bound(locs)?;
    let n = mech.n;
    let dist = locs.distance_matrix();
    let log_p: Vec<f64> = mech
        .matrix
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut max_v = f64::NEG_INFINITY;
    let mut worst = None;
    let mut triples = 0u64;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let bound = epsilon * dist[a * n + b];
            for y in 0..n {
                triples += 1;
                let la = log_p[a * n + y];
                if la == f64::NEG_INFINITY {
                    continue;
                }
                let lb = log_p[b * n + y];
                let v = la - lb - bound; // +inf when p(y|b) = 0
                if v > max_v {
                    max_v = v;
                    worst = Some((a, b, y));
                }
            }
        }
    }
    let max_log_violation = if triples == 0 { 0.0 } else { max_v.max(0.0) };
    Ok(PrivacyReport {
        satisfied: max_log_violation <= tol,
        max_log_violation,
        worst_triple: worst,
        triples_checked: triples,
    })
}

/// Expected distance between the true and the reported location:
/// `sum_{x,y} pi(x) p(y|x) d(x, y)`.
pub fn utility_loss(mech: &Mechanism, prior: &Prior, locs: &LocationSet) -> Result<f64> {
    mech.check_bound(locs)?;
    if prior.len() != mech.n {
        return Err(Error::DimensionMismatch {
            prior: prior.len(),
            locs: mech.n,
        });
    }
    let n = mech.n;
    let mut total = 0.0;
    for x in 0..n {
        let pi = prior.probs()[x];
        if pi == 0.0 {
            continue;
        }
        let mut row_loss = 0.0;
        for y in 0..n {
            row_loss += mech.prob(x, y) * locs.distance(x, y)?;
        }
        total += pi * row_loss;
    }
    Ok(total)
}

/// Draws `count` reported locations for true location `x`, by inverse CDF
/// over the canonical index order. Deterministic for a fixed seed.
pub fn sample(mech: &Mechanism, x: usize, rng_seed: u64, count: usize) -> Result<Vec<usize>> {
    if x >= mech.n {
        return Err(Error::IndexOutOfRange {
            index: x,
            len: mech.n,
        });
    }
    let row = mech.row(x);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng_seed);
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        // 53 uniform bits in [0, 1).
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let mut acc = 0.0;
        let mut pick = mech.n - 1;
        for (y, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = y;
                break;
            }
        }
        draws.push(pick);
    }
    Ok(draws)
}

#[derive(Serialize, Deserialize)]
struct MechanismFile {
    n: usize,
    epsilon: f64,
    ids: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

/// Saves the mechanism as JSON (`n`, `epsilon`, `ids`, `matrix`), row-major
/// and lossless to full double precision.
pub fn save_mechanism(mech: &Mechanism, path: &Path) -> Result<()> {
    let file = MechanismFile {
        n: mech.n,
        epsilon: mech.epsilon_declared,
        ids: mech.ids.clone(),
        matrix: (0..mech.n).map(|x| mech.row(x).to_vec()).collect(),
    };
    let mut text = serde_json::to_string(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a mechanism from JSON and re-validates every invariant.
pub fn load_mechanism(path: &Path) -> Result<Mechanism> {
    let text = std::fs::read_to_string(path)?;
    let file: MechanismFile = serde_json::from_str(&text)?;
    let mut matrix = Vec::with_capacity(file.n * file.n);
    for row in &file.matrix {
        if row.len() != file.n {
            return Err(Error::Malformed {
                what: "mechanism JSON",
                line: 0,
                detail: format!("row of length {} in an n = {} mechanism", row.len(), file.n),
            });
        }
        matrix.extend_from_slice(row);
    }
    if file.matrix.len() != file.n {
        return Err(Error::Malformed {
            what: "mechanism JSON",
            line: 0,
            detail: format!("{} rows in an n = {} mechanism", file.matrix.len(), file.n),
        });
    }
    Mechanism::validate(file.n, &file.ids, &matrix, file.epsilon)?;
    Ok(Mechanism {
        n: file.n,
        matrix,
        epsilon_declared: file.epsilon,
        ids: file.ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, uniform_prior};

    fn two_locs() -> LocationSet {
        build_grid(1, 2, 1.0).unwrap()
    }

    #[test]
    fn from_solution_oracle_point() {
        let locs = two_locs();
        let sol = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        let m = from_solution(&sol, &locs, 2f64.ln()).unwrap();
        assert_eq!(m.prob(0, 1), 1.0 / 3.0);
        assert_eq!(m.prob(1, 1), 2.0 / 3.0);
    }

    #[test]
    fn from_solution_clamps_noise() {
        let locs = two_locs();
        let sol = [1.0 + 1e-8, -1e-8, 0.5, 0.5];
        let m = from_solution(&sol, &locs, 1.0).unwrap();
        assert_eq!(m.prob(0, 1), 0.0);
        assert_eq!(m.prob(0, 0), 1.0);
    }

    #[test]
    fn from_solution_zeroes_noise_columns() {
        // A column that is solver noise around an exact zero must come out
        // exactly zero, or the strict zero-convention in verification would
        // flag an infinite ratio between 1e-17 and 0.
        let locs = two_locs();
        let sol = [1.0 - 1e-17, 1e-17, 1.0, -1e-16];
        let m = from_solution(&sol, &locs, 1.0).unwrap();
        assert_eq!(m.prob(0, 1), 0.0);
        assert_eq!(m.prob(1, 1), 0.0);
        assert_eq!(m.prob(0, 0), 1.0);
        // An active column keeps its small entries.
        let q = 1.0 / (1.0 + 20f64.exp());
        let sol = [1.0 - q, q, q, 1.0 - q];
        let m = from_solution(&sol, &locs, 20.0).unwrap();
        assert!(m.prob(0, 1) > 0.0);
    }

    #[test]
    fn from_solution_rejects_non_channel() {
        let locs = two_locs();
        assert!(matches!(
            from_solution(&[1.5, -0.5, 0.5, 0.5], &locs, 1.0),
            Err(Error::NotAChannel { .. })
        ));
        assert!(matches!(
            from_solution(&[0.7, 0.2, 0.5, 0.5], &locs, 1.0),
            Err(Error::RowSumInvalid { x: 0, .. })
        ));
    }

    #[test]
    fn verify_uniform_satisfied_with_zero_violation() {
        let locs = build_grid(2, 2, 1.0).unwrap();
        let m = uniform_mechanism(&locs, 0.5);
        let rep = verify_privacy(&m, &locs, 0.5, 1e-7).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.max_log_violation, 0.0);
        assert_eq!(rep.triples_checked, 4 * 4 * 3);
    }

    #[test]
    fn verify_identity_flags_zero_probability_triple() {
        let locs = two_locs();
        let m = identity_mechanism(&locs, 1.0);
        let rep = verify_privacy(&m, &locs, 1.0, 1e-7).unwrap();
        assert!(!rep.satisfied);
        assert!(rep.max_log_violation.is_infinite());
        assert_eq!(rep.worst_triple, Some((0, 1, 0)));
    }

    #[test]
    fn verify_respects_epsilon_scale() {
        // p(y|a)/p(y|b) = 2 at distance 1: satisfied iff eps >= ln 2.
        let locs = two_locs();
        let m = from_solution(&[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0], &locs, 0.0).unwrap();
        assert!(verify_privacy(&m, &locs, 2f64.ln(), 1e-9).unwrap().satisfied);
        let rep = verify_privacy(&m, &locs, 0.5, 1e-9).unwrap();
        assert!(!rep.satisfied);
        assert!((rep.max_log_violation - (2f64.ln() - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn operations_reject_unbound_location_set() {
        let locs = two_locs();
        let other = build_grid(1, 3, 1.0).unwrap();
        let m = uniform_mechanism(&locs, 1.0);
        assert!(matches!(
            verify_privacy(&m, &other, 1.0, 1e-7),
            Err(Error::LocationSetMismatch)
        ));
        let prior = uniform_prior(3).unwrap();
        assert!(matches!(
            utility_loss(&m, &prior, &other),
            Err(Error::LocationSetMismatch)
        ));
    }

    #[test]
    fn utility_values() {
        let locs = two_locs();
        let prior = uniform_prior(2).unwrap();
        let id = identity_mechanism(&locs, 1.0);
        assert_eq!(utility_loss(&id, &prior, &locs).unwrap(), 0.0);
        let uni = uniform_mechanism(&locs, 1.0);
        assert_eq!(utility_loss(&uni, &prior, &locs).unwrap(), 0.5);
    }

    #[test]
    fn sample_deterministic_and_unbiased() {
        let locs = two_locs();
        let m = from_solution(&[0.0, 1.0, 0.5, 0.5], &locs, 1.0).unwrap();
        // A deterministic row always yields the same index.
        let d = sample(&m, 0, 7, 100).unwrap();
        assert!(d.iter().all(|&y| y == 1));
        // Identical seeds give identical sequences.
        let a = sample(&m, 1, 42, 1000).unwrap();
        let b = sample(&m, 1, 42, 1000).unwrap();
        assert_eq!(a, b);
        // Frequency of index 0 within 4 sigma of one half.
        let draws = sample(&m, 1, 12345, 100_000).unwrap();
        let freq = draws.iter().filter(|&&y| y == 0).count() as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    proptest::proptest! {
        #[test]
        fn json_roundtrip_is_lossless(seed in 0u64..1000, n in 1usize..6) {
            // Random row-stochastic matrices survive save/load bit-exactly.
            let locs = build_grid(1, n, 1.0).unwrap();
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let mut matrix = vec![0.0; n * n];
            for x in 0..n {
                let row = &mut matrix[x * n..(x + 1) * n];
                for v in row.iter_mut() {
                    *v = next() + 1e-3;
                }
                let sum: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            let mech = from_solution(&matrix, &locs, 0.7).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_mechanism(&mech, &path).unwrap();
            let loaded = load_mechanism(&path).unwrap();
            let bits = |m: &Mechanism| m.matrix().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            proptest::prop_assert_eq!(bits(&loaded), bits(&mech));
        }
    }

    #[test]
    fn json_roundtrip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let locs = two_locs();
        let m = from_solution(&[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0], &locs, 2f64.ln())
            .unwrap();
        let path = dir.path().join("mech.json");
        save_mechanism(&m, &path).unwrap();
        let loaded = load_mechanism(&path).unwrap();
        assert_eq!(loaded, m);

        // Key order is fixed.
        let text = std::fs::read_to_string(&path).unwrap();
        let n_pos = text.find("\"n\"").unwrap();
        let e_pos = text.find("\"epsilon\"").unwrap();
        let i_pos = text.find("\"ids\"").unwrap();
        let m_pos = text.find("\"matrix\"").unwrap();
        assert!(n_pos < e_pos && e_pos < i_pos && i_pos < m_pos);

        // A tampered row sum is rejected on load.
        let tampered = text.replace("0.6666666666666666", "0.4666666666666666");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            load_mechanism(&path),
            Err(Error::RowSumInvalid { .. })
        ));
    }
}
