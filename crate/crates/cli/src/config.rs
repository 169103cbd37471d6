//! Run configuration: JSON config files, flag overrides, and the resolved
//! form echoed into reports so any run can be reproduced from its report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaPolicy {
    /// Exact graph dilation, computed from the edge set.
    Named(String),
    /// Externally supplied value (a worst-case bound, for instance).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Builtin,
    Export,
}

/// A config file: every field optional, command-line flags override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub epsilon: Option<f64>,
    pub radius: Option<f64>,
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<serde_json::Value>,
    pub solver: Option<SolverChoice>,
    pub locations: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub lp_out: Option<PathBuf>,
    pub dump_constraints: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub feas_tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read config: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config JSON: {e}"))
    }
}

/// Fully resolved configuration, echoed into the solve report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub mode: Mode,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub delta_policy: String,
    pub solver: SolverChoice,
    pub locations: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_constraints: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_iters: usize,
    pub feas_tol: f64,
}

/// Parses a `--delta` argument: `auto` or a number.
pub fn parse_delta(s: &str) -> Result<DeltaPolicy, String> {
    if s == "auto" {
        return Ok(DeltaPolicy::Named("auto".into()));
    }
    s.parse::<f64>()
        .map(DeltaPolicy::Fixed)
        .map_err(|_| format!("--delta expects a number or \"auto\", got {s:?}"))
}

/// Interprets a config file's `delta` field.
pub fn delta_from_value(v: &serde_json::Value) -> Result<DeltaPolicy, String> {
    match v {
        serde_json::Value::String(s) if s == "auto" => Ok(DeltaPolicy::Named("auto".into())),
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(DeltaPolicy::Fixed)
            .ok_or_else(|| "delta is not a finite number".into()),
        other => Err(format!("delta must be \"auto\" or a number, got {other}")),
    }
}
