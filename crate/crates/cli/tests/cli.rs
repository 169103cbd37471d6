//! Surface tests for the command-line interface: flags, file formats, and
//! the exit-code contract (0 ok, 1 verification failure, 2 usage, 3 solver).

use std::path::Path;
use std::process::{Command, Output};

fn geoind(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoind"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn geoind")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const EPS: &str = "0.34657359027997264"; // ln(2)/2

#[test]
fn build_grid_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "8", "--cols", "8", "--spacing", "1", "--out", "g8.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("g8.csv")).unwrap();
    assert_eq!(text.lines().count(), 65); // header + 64 points
    assert!(text.starts_with("id,x,y\n0_0,0,0\n"));
}

#[test]
fn build_grid_single_point_and_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "1", "--cols", "1", "--out", "one.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(text, "id,x,y\n0_0,0,0\n");

    let out = geoind(
        &["build-grid", "--rows", "0", "--cols", "3", "--out", "bad.csv"],
        dir.path(),
    );
    assert_exit(&out, 2);
}

fn write_two_locations(dir: &Path) {
    std::fs::write(dir.join("two.csv"), "id,x,y\na,0,0\nb,1,0\n").unwrap();
}

#[test]
fn solve_two_location_oracle_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    let out = geoind(
        &[
            "solve", "--locations", "two.csv", "--exact", "--epsilon", "0.6931471805599453",
            "--out", "mech.json", "--report", "report.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let objective = report["objective"].as_f64().unwrap();
    assert!((objective - 1.0 / 3.0).abs() < 1e-6, "objective {objective}");
    assert_eq!(report["status"], "optimal");
    assert_eq!(report["mode"], "exact");
    // Config echo is complete enough to re-run.
    assert_eq!(report["config"]["locations"], "two.csv");
    assert_eq!(
        report["config"]["epsilon"].as_f64().unwrap(),
        std::f64::consts::LN_2
    );

    // The mechanism verifies at its declared epsilon.
    let out = geoind(
        &[
            "verify", "--mechanism", "mech.json", "--locations", "two.csv",
            "--epsilon", "0.6931471805599453",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
}

#[test]
fn verify_identity_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    std::fs::write(
        dir.path().join("identity.json"),
        "{\"n\":2,\"epsilon\":1.0,\"ids\":[\"a\",\"b\"],\"matrix\":[[1.0,0.0],[0.0,1.0]]}\n",
    )
    .unwrap();
    let out = geoind(
        &[
            "verify", "--mechanism", "identity.json", "--locations", "two.csv",
            "--epsilon", "1.0", "--out", "verdict.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 1);
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap())
            .unwrap();
    assert_eq!(verdict["satisfied"], false);
    assert_eq!(verdict["max_log_violation"], "inf");
    assert_eq!(verdict["worst_triple"], serde_json::json!([0, 1, 0]));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("worst triple"), "stderr: {err}");
}

#[test]
fn verify_rejects_negative_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    std::fs::write(
        dir.path().join("m.json"),
        "{\"n\":2,\"epsilon\":1.0,\"ids\":[\"a\",\"b\"],\"matrix\":[[0.5,0.5],[0.5,0.5]]}\n",
    )
    .unwrap();
    let out = geoind(
        &[
            "verify", "--mechanism", "m.json", "--locations", "two.csv",
            "--epsilon", "1.0", "--tol", "-1",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn dilation_values_and_disconnection() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "3", "--cols", "3", "--out", "g3.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let out = geoind(
        &["dilation", "--locations", "g3.csv", "--radius", "1.0", "--out", "d.json"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let d: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap())
            .unwrap();
    assert!((d["delta"].as_f64().unwrap() - std::f64::consts::SQRT_2).abs() < 1e-6);
    assert_eq!(d["edges"], 24);

    // Radius below the minimum pairwise distance: nothing to connect.
    let out = geoind(
        &["dilation", "--locations", "g3.csv", "--radius", "0.5"],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn solve_requires_exactly_one_radius_flavor() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    let base = [
        "solve", "--locations", "two.csv", "--reduced", "--epsilon", EPS, "--out", "m.json",
    ];
    // Neither --radius nor --c.
    let out = geoind(&base, dir.path());
    assert_exit(&out, 2);
    // --c on a CSV location set without --rho: no covering radius known.
    let mut with_c = base.to_vec();
    with_c.extend(["--c", "2.8"]);
    let out = geoind(&with_c, dir.path());
    assert_exit(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("covering radius unavailable"), "stderr: {err}");
    // --c with --rho works.
    let mut with_rho = with_c.clone();
    with_rho.extend(["--rho", "0.5"]);
    let out = geoind(&with_rho, dir.path());
    assert_exit(&out, 0);
}

#[test]
fn exact_mode_rejects_radius() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    let out = geoind(
        &[
            "solve", "--locations", "two.csv", "--exact", "--radius", "1.0",
            "--epsilon", EPS, "--out", "m.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn builtin_range_policy_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "13", "--cols", "13", "--out", "g13.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    // 169 locations exceed the builtin range in both modes.
    let out = geoind(
        &[
            "solve", "--locations", "g13.csv", "--reduced", "--c", "2.8", "--rho",
            "0.7071067811865476", "--epsilon", EPS, "--out", "m.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("use --solver export"));

    let out = geoind(
        &[
            "sweep", "--sizes", "13", "--c", "2.8", "--epsilon", EPS, "--out", "s.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("use --solver export"));
}

#[test]
fn iteration_limit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "4", "--cols", "4", "--out", "g4.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let out = geoind(
        &[
            "solve", "--locations", "g4.csv", "--exact", "--epsilon", EPS,
            "--out", "m.json", "--max-iters", "3", "--report", "r.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["status"], "iteration-limit");
}

#[test]
fn export_mode_writes_lp_instead_of_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "3", "--cols", "3", "--out", "g3.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let out = geoind(
        &[
            "solve", "--locations", "g3.csv", "--reduced", "--radius", "1.0",
            "--epsilon", EPS, "--solver", "export", "--lp-out", "g3.lp",
            "--report", "r.json", "--dump-constraints", "cs.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let lp_text = std::fs::read_to_string(dir.path().join("g3.lp")).unwrap();
    assert!(lp_text.contains("Minimize"));
    assert!(lp_text.ends_with("End\n"));
    let cs = std::fs::read_to_string(dir.path().join("cs.csv")).unwrap();
    assert_eq!(cs.lines().count(), 1 + 216);
    assert!(cs.starts_with("a,b,y,mult\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["status"], "exported");
    assert_eq!(report["rows"], 216);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    write_two_locations(dir.path());
    std::fs::write(
        dir.path().join("run.json"),
        format!(
            "{{\"mode\":\"exact\",\"epsilon\":{EPS},\"locations\":\"two.csv\",\"out\":\"a.json\",\"delta\":\"auto\"}}"
        ),
    )
    .unwrap();
    let out = geoind(&["solve", "--config", "run.json"], dir.path());
    assert_exit(&out, 0);
    assert!(dir.path().join("a.json").exists());
    // A flag overrides the config's output path.
    let out = geoind(
        &["solve", "--config", "run.json", "--out", "b.json"],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(dir.path().join("b.json").exists());
    // Unknown config keys are rejected.
    std::fs::write(dir.path().join("bad.json"), "{\"modee\":\"exact\"}").unwrap();
    let out = geoind(&["solve", "--config", "bad.json"], dir.path());
    assert_exit(&out, 2);
}

#[test]
fn fixed_delta_override_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &["build-grid", "--rows", "3", "--cols", "3", "--out", "g3.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    // 1.5 exceeds the exact dilation sqrt(2) of the axis graph, so the
    // reduction stays sound, just more conservative.
    let out = geoind(
        &[
            "solve", "--locations", "g3.csv", "--reduced", "--radius", "1.0",
            "--delta", "1.5", "--epsilon", EPS, "--out", "m.json", "--report", "r.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["delta"].as_f64().unwrap(), 1.5);
    assert_eq!(report["config"]["delta_policy"], "1.5");
    let out = geoind(
        &[
            "verify", "--mechanism", "m.json", "--locations", "g3.csv", "--epsilon", EPS,
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    // Understating the dilation draws a warning but still runs.
    let out = geoind(
        &[
            "solve", "--locations", "g3.csv", "--reduced", "--radius", "1.0",
            "--delta", "1.05", "--epsilon", EPS, "--out", "m2.json",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("below the exact dilation"));
}

#[test]
fn sweep_export_mode_writes_lp_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoind(
        &[
            "sweep", "--sizes", "3", "--c", "2.8", "--epsilon", EPS, "--include-exact",
            "--solver", "export", "--out", "s.csv", "--lp-dir", "lps",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(dir.path().join("lps/exact_3x3.lp").exists());
    assert!(dir.path().join("lps/reduced_3x3_c2.8.lp").exists());
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    for row in text.lines().skip(1) {
        assert!(row.ends_with(",exported"), "row: {row}");
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[5], "", "objective must be empty in export mode");
    }
}

#[test]
fn sweep_records_instance_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--sizes", "3", "--c", "2.8,3.4", "--epsilon", EPS,
        "--include-exact", "--out", "s.csv",
    ];
    let out = geoind(&args, dir.path());
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,c,R,delta,rows,objective,wall_time_s,status");
    assert_eq!(lines.len(), 4); // header + exact + two c rows
    assert!(lines[1].starts_with("9,,,1,648,"));
    assert!(lines[2].starts_with("9,2.8,"));
    assert!(lines[3].starts_with("9,3.4,"));
    for row in &lines[1..] {
        assert!(row.ends_with(",optimal"), "row: {row}");
    }
    // The exact objective never exceeds a reduced one for the same grid.
    let objective = |line: &str| -> f64 { line.split(',').nth(5).unwrap().parse().unwrap() };
    let exact = objective(lines[1]);
    for row in &lines[2..] {
        assert!(exact <= objective(row) + 1e-7);
    }
}
