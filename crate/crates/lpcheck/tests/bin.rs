//! End-to-end runs of the lpcheck binary.

use std::process::Command;

#[test]
fn solves_a_file_and_writes_solution() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("t.lp");
    std::fs::write(
        &lp,
        "Minimize\n obj: 0.5 a + 0.5 b\nSubject To\n n0: a + b = 1\n c0: a - 2 b <= 0\nEnd\n",
    )
    .unwrap();
    let sol = dir.path().join("t.sol");
    let out = Command::new(env!("CARGO_BIN_EXE_lpcheck"))
        .args([lp.to_str().unwrap(), "--out", sol.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&sol).unwrap();
    assert!(text.starts_with("# objective 0.5"));
    assert!(text.contains("\na "));
    assert!(text.contains("\nb "));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method simplex"), "stdout: {stdout}");
}

#[test]
fn rejects_unknown_method_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lpcheck"))
        .args(["nope.lp", "--out", "x.sol", "--method", "quantum"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_lpcheck"))
        .args(["nope.lp", "--out", "x.sol"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
