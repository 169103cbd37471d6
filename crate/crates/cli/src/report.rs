//! JSON shapes the commands emit. Struct field order fixes the key order,
//! keeping every output deterministic.

use serde::{Serialize, Serializer};

use crate::config::{ResolvedConfig, SolverChoice};

/// `verify` output.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub satisfied: bool,
    #[serde(serialize_with = "ser_violation")]
    pub max_log_violation: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
    pub triples_checked: u64,
    pub epsilon: f64,
    pub tol: f64,
    pub n: usize,
}

/// Infinite violations (a zero-probability denominator) serialize as the
/// string "inf"; JSON numbers cannot carry them.
fn ser_violation<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        ser.serialize_f64(*v)
    } else {
        ser.serialize_str("inf")
    }
}

/// `dilation` output.
#[derive(Debug, Serialize)]
pub struct DilationReport {
    pub delta: f64,
    pub witness: (usize, usize),
    pub witness_ids: (String, String),
    pub edges: usize,
    pub n: usize,
    pub radius: f64,
}

/// `solve` output.
#[derive(Debug, Serialize)]
pub struct SolveReportJson {
    pub n: usize,
    pub mode: crate::config::Mode,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    pub rows: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub wall_time_s: f64,
    pub solver: SolverChoice,
    pub config: ResolvedConfig,
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("report serialization");
    s.push('\n');
    s
}
