//! Command implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use geoind::prelude::*;

use crate::config::{
    delta_from_value, parse_delta, DeltaPolicy, Mode, ResolvedConfig, RunConfig, SolverChoice,
};
use crate::report::{to_json_line, DilationReport, SolveReportJson, VerifyReport};
use crate::{CliError, Result};

pub const RANGE_MSG: &str = "instance exceeds builtin solver range; use --solver export";

/// Builtin-solver range policy: exact programs up to 4x4 grids, reduced up
/// to 6x6. Larger instances go through the LP export.
fn builtin_allows(mode: Mode, n: usize) -> bool {
    match mode {
        Mode::Exact => n <= 16,
        Mode::Reduced => n <= 36,
    }
}

fn map_err(e: geoind::Error) -> CliError {
    match e {
        geoind::Error::SolverCertification(_) | geoind::Error::SingularBasis => {
            CliError::Solver(e.to_string())
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn write_or_print(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- build-grid

pub fn cmd_build_grid(rows: usize, cols: usize, spacing: f64, out: &Path) -> Result<()> {
    let grid = build_grid(rows, cols, spacing).map_err(map_err)?;
    grid.save_csv(out).map_err(map_err)?;
    eprintln!("wrote {} locations to {}", grid.len(), out.display());
    Ok(())
}

// --------------------------------------------------------------------- solve

#[derive(Debug, Clone)]
pub struct SolveInputs {
    pub config: Option<PathBuf>,
    pub locations: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub exact: bool,
    pub reduced: bool,
    pub radius: Option<f64>,
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<String>,
    pub solver: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub lp_out: Option<PathBuf>,
    pub dump_constraints: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub feas_tol: Option<f64>,
}

struct Resolved {
    mode: Mode,
    epsilon: f64,
    radius: Option<f64>,
    c: Option<f64>,
    rho: Option<f64>,
    delta: DeltaPolicy,
    solver: SolverChoice,
    locations: PathBuf,
    prior: Option<PathBuf>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    lp_out: Option<PathBuf>,
    dump_constraints: Option<PathBuf>,
    seed: Option<u64>,
    max_iters: usize,
    feas_tol: f64,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn resolve(args: &SolveInputs) -> Result<Resolved> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    let mode = match (args.exact, args.reduced) {
        (true, true) => return Err(usage("--exact and --reduced are mutually exclusive")),
        (true, false) => Mode::Exact,
        (false, true) => Mode::Reduced,
        (false, false) => cfg
            .mode
            .ok_or_else(|| usage("mode required: --exact or --reduced"))?,
    };
    let epsilon = args
        .epsilon
        .or(cfg.epsilon)
        .ok_or_else(|| usage("--epsilon required"))?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(usage(format!("epsilon must be positive, got {epsilon}")));
    }
    // A radius/c pair on the command line replaces the config's pair
    // entirely; mixing the two sources would be ambiguous.
    let (radius, c) = if args.radius.is_some() || args.c.is_some() {
        (args.radius, args.c)
    } else {
        (cfg.radius, cfg.c)
    };
    match mode {
        Mode::Exact => {
            if radius.is_some() || c.is_some() {
                return Err(usage("--radius/--c are meaningless in exact mode"));
            }
        }
        Mode::Reduced => {
            if radius.is_some() == c.is_some() {
                return Err(usage("reduced mode takes exactly one of --radius or --c"));
            }
        }
    }
    let delta = match (&args.delta, &cfg.delta) {
        (Some(s), _) => parse_delta(s).map_err(usage)?,
        (None, Some(v)) => delta_from_value(v).map_err(usage)?,
        (None, None) => DeltaPolicy::Named("auto".into()),
    };
    if let DeltaPolicy::Fixed(d) = delta {
        if !d.is_finite() || d < 1.0 {
            return Err(usage(format!("delta must be at least 1, got {d}")));
        }
    }
    let solver = match args.solver.as_deref() {
        Some("builtin") => SolverChoice::Builtin,
        Some("export") => SolverChoice::Export,
        Some(other) => return Err(usage(format!("unknown solver {other:?}"))),
        None => cfg.solver.unwrap_or(SolverChoice::Builtin),
    };
    let locations = args
        .locations
        .clone()
        .or(cfg.locations)
        .ok_or_else(|| usage("--locations required"))?;
    let out = args.out.clone().or(cfg.out);
    let lp_out = args.lp_out.clone().or(cfg.lp_out);
    match solver {
        SolverChoice::Builtin if out.is_none() => {
            return Err(usage("--out required with the builtin solver"))
        }
        SolverChoice::Export if lp_out.is_none() => {
            return Err(usage("--lp-out required in export mode"))
        }
        _ => {}
    }
    let feas_tol = args.feas_tol.or(cfg.feas_tol).unwrap_or(1e-9);
    if !feas_tol.is_finite() || feas_tol <= 0.0 {
        return Err(usage(format!("feas-tol must be positive, got {feas_tol}")));
    }
    Ok(Resolved {
        mode,
        epsilon,
        radius,
        c,
        rho: args.rho.or(cfg.rho),
        delta,
        solver,
        locations,
        prior: args.prior.clone().or(cfg.prior),
        out,
        report: args.report.clone().or(cfg.report),
        lp_out,
        dump_constraints: args.dump_constraints.clone().or(cfg.dump_constraints),
        seed: args.seed.or(cfg.seed),
        max_iters: args.max_iters.or(cfg.max_iters).unwrap_or(200_000),
        feas_tol,
    })
}

/// Resolves the edge radius, preferring an explicit `--radius`, otherwise
/// `c * rho` with rho from the grid or from `--rho`.
fn resolve_radius(
    radius: Option<f64>,
    c: Option<f64>,
    rho: Option<f64>,
    locs: &LocationSet,
) -> Result<(f64, Option<f64>)> {
    if let Some(r) = radius {
        return Ok((r, rho));
    }
    let c = c.expect("validated: exactly one of radius/c");
    let rho = match rho {
        Some(r) => r,
        None => locs.covering_radius().map_err(|_| {
            usage("covering radius unavailable; supply rho explicitly (--rho)")
        })?,
    };
    Ok((c * rho, Some(rho)))
}

struct Solved {
    delta: f64,
    edges: Option<usize>,
    rows: u64,
    status: String,
    objective: Option<f64>,
    iterations: Option<usize>,
    point: Option<Vec<f64>>,
}

/// One instance, fully resolved.
struct InstanceSpec<'a> {
    mode: Mode,
    epsilon: f64,
    radius: Option<f64>,
    rho: Option<f64>,
    delta_policy: &'a DeltaPolicy,
    solver: SolverChoice,
    lp_out: Option<&'a Path>,
    dump: Option<&'a Path>,
    max_iters: usize,
    feas_tol: f64,
}

/// Builds constraints and either solves or exports one instance.
fn run_instance(locs: &LocationSet, prior: &Prior, spec: &InstanceSpec) -> Result<Solved> {
    let epsilon = spec.epsilon;
    let (cs, delta, edge_count) = match spec.mode {
        Mode::Exact => (exact_constraints(locs, epsilon).map_err(map_err)?, 1.0, None),
        Mode::Reduced => {
            let radius = spec.radius.expect("reduced mode resolved a radius");
            let edges = build_edges(locs, radius).map_err(map_err)?;
            if edges.below_density_bound()
                || spec
                    .rho
                    .is_some_and(|r| locs.spacing().is_none() && radius < 2.0 * r)
            {
                eprintln!(
                    "warning: R = {radius} is below 2*rho; the density bound no longer guarantees connectivity"
                );
            }
            let dil = dilation(locs, &edges).map_err(map_err)?;
            let delta = match spec.delta_policy {
                DeltaPolicy::Named(_) => dil.delta(),
                DeltaPolicy::Fixed(d) => {
                    if *d < dil.delta() - 1e-9 {
                        eprintln!(
                            "warning: supplied delta {d} is below the exact dilation {}; \
                             the reduced constraints will not imply the full definition",
                            dil.delta()
                        );
                    }
                    *d
                }
            };
            let count = edges.len();
            (
                reduced_constraints(locs, &edges, delta, epsilon).map_err(map_err)?,
                delta,
                Some(count),
            )
        }
    };
    if let Some(path) = spec.dump {
        cs.dump_csv(path).map_err(map_err)?;
    }
    let rows = cs.len() as u64;
    let lp = assemble(locs, prior, &cs).map_err(map_err)?;
    match spec.solver {
        SolverChoice::Export => {
            export_lp(&lp, spec.lp_out.expect("validated: lp_out in export mode"))
                .map_err(map_err)?;
            Ok(Solved {
                delta,
                edges: edge_count,
                rows,
                status: "exported".into(),
                objective: None,
                iterations: None,
                point: None,
            })
        }
        SolverChoice::Builtin => {
            let opts = SolveOptions {
                max_iters: spec.max_iters,
                feas_tol: spec.feas_tol,
                ..Default::default()
            };
            let (point, report) = solve_builtin(&lp, &opts).map_err(map_err)?;
            match report.status {
                SolveStatus::Optimal => Ok(Solved {
                    delta,
                    edges: edge_count,
                    rows,
                    status: "optimal".into(),
                    objective: Some(report.objective_value),
                    iterations: Some(report.iterations),
                    point: Some(point),
                }),
                SolveStatus::IterationLimit => Ok(Solved {
                    delta,
                    edges: edge_count,
                    rows,
                    status: "iteration-limit".into(),
                    objective: None,
                    iterations: Some(report.iterations),
                    point: None,
                }),
                SolveStatus::Infeasible => Err(CliError::Solver(
                    "solver reported an infeasible program (malformed input?)".into(),
                )),
            }
        }
    }
}

pub fn cmd_solve(args: &SolveInputs) -> Result<()> {
    let start = Instant::now();
    let r = resolve(args)?;
    let locs = LocationSet::load_csv(&r.locations).map_err(map_err)?;
    let prior = match &r.prior {
        Some(p) => load_prior(p, &locs).map_err(map_err)?,
        None => uniform_prior(locs.len()).map_err(map_err)?,
    };
    if r.solver == SolverChoice::Builtin && !builtin_allows(r.mode, locs.len()) {
        return Err(usage(RANGE_MSG));
    }
    let (radius, rho) = match r.mode {
        Mode::Reduced => {
            let (rad, rho) = resolve_radius(r.radius, r.c, r.rho, &locs)?;
            (Some(rad), rho)
        }
        Mode::Exact => (None, r.rho),
    };
    let solved = run_instance(
        &locs,
        &prior,
        &InstanceSpec {
            mode: r.mode,
            epsilon: r.epsilon,
            radius,
            rho,
            delta_policy: &r.delta,
            solver: r.solver,
            lp_out: r.lp_out.as_deref(),
            dump: r.dump_constraints.as_deref(),
            max_iters: r.max_iters,
            feas_tol: r.feas_tol,
        },
    )?;

    if let Some(point) = &solved.point {
        let mech = from_solution(point, &locs, r.epsilon).map_err(map_err)?;
        let out = r.out.as_ref().expect("validated: out in builtin mode");
        save_mechanism(&mech, out).map_err(map_err)?;
    }

    let status = solved.status.clone();
    let report = SolveReportJson {
        n: locs.len(),
        mode: r.mode,
        epsilon: r.epsilon,
        radius,
        c: r.c,
        delta: solved.delta,
        edges: solved.edges,
        rows: solved.rows,
        status: solved.status,
        objective: solved.objective,
        iterations: solved.iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        solver: r.solver,
        config: ResolvedConfig {
            mode: r.mode,
            epsilon: r.epsilon,
            radius,
            c: r.c,
            rho,
            delta_policy: match r.delta {
                DeltaPolicy::Named(_) => "auto".into(),
                DeltaPolicy::Fixed(d) => format!("{d}"),
            },
            solver: r.solver,
            locations: r.locations.clone(),
            prior: r.prior.clone(),
            out: r.out.clone(),
            report: r.report.clone(),
            lp_out: r.lp_out.clone(),
            dump_constraints: r.dump_constraints.clone(),
            seed: r.seed,
            max_iters: r.max_iters,
            feas_tol: r.feas_tol,
        },
    };
    write_or_print(&r.report, &to_json_line(&report))?;
    if status == "iteration-limit" {
        return Err(CliError::Solver(format!(
            "iteration limit ({}) reached before optimality",
            r.max_iters
        )));
    }
    Ok(())
}

// -------------------------------------------------------------------- verify

pub fn cmd_verify(
    mechanism: &Path,
    locations: &Path,
    epsilon: f64,
    tol: f64,
    out: &Option<PathBuf>,
) -> Result<()> {
    if tol.is_nan() || tol < 0.0 {
        return Err(usage(format!("--tol must be nonnegative, got {tol}")));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(usage(format!("--epsilon must be nonnegative, got {epsilon}")));
    }
    let locs = LocationSet::load_csv(locations).map_err(map_err)?;
    let mech = load_mechanism(mechanism).map_err(map_err)?;
    let rep = verify_privacy(&mech, &locs, epsilon, tol).map_err(map_err)?;
    let json = VerifyReport {
        satisfied: rep.satisfied,
        max_log_violation: rep.max_log_violation,
        worst_triple: rep.worst_triple,
        triples_checked: rep.triples_checked,
        epsilon,
        tol,
        n: locs.len(),
    };
    write_or_print(out, &to_json_line(&json))?;
    if rep.satisfied {
        Ok(())
    } else {
        if let Some((a, b, y)) = rep.worst_triple {
            eprintln!(
                "privacy violated: worst triple a={} b={} y={} (log violation {})",
                locs.id(a),
                locs.id(b),
                locs.id(y),
                rep.max_log_violation
            );
        }
        Err(CliError::NotSatisfied)
    }
}

// ------------------------------------------------------------------ dilation

pub fn cmd_dilation(
    locations: &Path,
    radius: Option<f64>,
    c: Option<f64>,
    rho: Option<f64>,
    out: &Option<PathBuf>,
) -> Result<()> {
    if radius.is_some() == c.is_some() {
        return Err(usage("dilation takes exactly one of --radius or --c"));
    }
    let locs = LocationSet::load_csv(locations).map_err(map_err)?;
    let (radius, _) = resolve_radius(radius, c, rho, &locs)?;
    let edges = build_edges(&locs, radius).map_err(map_err)?;
    let dil = dilation(&locs, &edges).map_err(map_err)?;
    let (a, b) = dil.witness();
    let json = DilationReport {
        delta: dil.delta(),
        witness: (a, b),
        witness_ids: (locs.id(a).to_string(), locs.id(b).to_string()),
        edges: edges.len(),
        n: locs.len(),
        radius,
    };
    write_or_print(out, &to_json_line(&json))
}

// --------------------------------------------------------------------- sweep

pub struct SweepInputs {
    pub sizes: Vec<usize>,
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub include_exact: bool,
    pub solver: SolverChoice,
    pub out: PathBuf,
    pub lp_dir: Option<PathBuf>,
    pub spacing: f64,
    pub max_iters: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_sweep(args: &SweepInputs) -> Result<()> {
    if !args.epsilon.is_finite() || args.epsilon <= 0.0 {
        return Err(usage("--epsilon must be positive"));
    }
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut cs = args.c.clone();
    cs.sort_by(|a, b| a.partial_cmp(b).expect("finite c"));
    cs.dedup();
    if sizes.is_empty() || (cs.is_empty() && !args.include_exact) {
        return Err(usage("--sizes and --c must be nonempty"));
    }
    // Range policy is checked upfront so a sweep never dies halfway.
    if args.solver == SolverChoice::Builtin {
        for &k in &sizes {
            let n = k * k;
            if args.include_exact && !builtin_allows(Mode::Exact, n) {
                return Err(usage(RANGE_MSG));
            }
            if !cs.is_empty() && !builtin_allows(Mode::Reduced, n) {
                return Err(usage(RANGE_MSG));
            }
        }
    }
    if args.solver == SolverChoice::Export {
        let dir = args
            .lp_dir
            .as_ref()
            .ok_or_else(|| usage("--lp-dir required in export mode"))?;
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(e.to_string()))?;
    }

    let mut csv = String::from("n,c,R,delta,rows,objective,wall_time_s,status\n");
    for &k in &sizes {
        let locs = build_grid(k, k, args.spacing).map_err(map_err)?;
        let n = locs.len();
        let prior = uniform_prior(n).map_err(map_err)?;
        let rho = locs.covering_radius().map_err(map_err)?;

        let emit = |c_val: Option<f64>, res: Result<Solved>, secs: f64, csv: &mut String| {
            let radius = c_val.map(|c| c * rho);
            match res {
                Ok(s) => writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    n,
                    fmt_opt(c_val),
                    fmt_opt(radius),
                    s.delta,
                    s.rows,
                    fmt_opt(s.objective),
                    secs,
                    s.status
                )
                .expect("string write"),
                Err(e) => {
                    // Keep the status column a single CSV field.
                    let msg = e.to_string().replace(',', ";");
                    writeln!(
                        csv,
                        "{},{},{},,,,{},error: {}",
                        n,
                        fmt_opt(c_val),
                        fmt_opt(radius),
                        secs,
                        msg
                    )
                    .expect("string write")
                }
            }
        };

        let auto = DeltaPolicy::Named("auto".into());
        if args.include_exact {
            let lp_path = args
                .lp_dir
                .as_ref()
                .map(|d| d.join(format!("exact_{k}x{k}.lp")));
            let t = Instant::now();
            let res = run_instance(
                &locs,
                &prior,
                &InstanceSpec {
                    mode: Mode::Exact,
                    epsilon: args.epsilon,
                    radius: None,
                    rho: Some(rho),
                    delta_policy: &auto,
                    solver: args.solver,
                    lp_out: lp_path.as_deref(),
                    dump: None,
                    max_iters: args.max_iters,
                    feas_tol: 1e-9,
                },
            );
            emit(None, res, t.elapsed().as_secs_f64(), &mut csv);
        }
        for &c_val in &cs {
            let radius = c_val * rho;
            let lp_path = args
                .lp_dir
                .as_ref()
                .map(|d| d.join(format!("reduced_{k}x{k}_c{c_val}.lp")));
            let t = Instant::now();
            let res = run_instance(
                &locs,
                &prior,
                &InstanceSpec {
                    mode: Mode::Reduced,
                    epsilon: args.epsilon,
                    radius: Some(radius),
                    rho: Some(rho),
                    delta_policy: &auto,
                    solver: args.solver,
                    lp_out: lp_path.as_deref(),
                    dump: None,
                    max_iters: args.max_iters,
                    feas_tol: 1e-9,
                },
            );
            emit(Some(c_val), res, t.elapsed().as_secs_f64(), &mut csv);
        }
    }
    std::fs::write(&args.out, csv).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}
