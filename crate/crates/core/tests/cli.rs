use std::path::Path;
use std::process::{Command, Output};

use frachk::output::{read_csv, Summary};

fn frachk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frachk"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn demo_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = frachk(&[
        "demo",
        "example1",
        "--grid",
        "128",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "state.csv",
        "costate.csv",
        "control.csv",
        "uncontrolled_state.csv",
        "summary.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.n, 128);
    assert!(summary.terminal_diameter_controlled < summary.terminal_diameter_uncontrolled);
    let state = read_csv(out.join("state.csv")).unwrap();
    assert_eq!(state.header[..3], ["t", "x_0_1", "x_1_1"]);
    assert_eq!(state.rows.len(), 128);
    let text = std::fs::read_to_string(out.join("control.csv")).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn modes_select_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u");
    let o = frachk(&[
        "demo",
        "example2",
        "--mode",
        "uncontrolled",
        "--grid",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("uncontrolled_state.csv").exists());
    assert!(!out.join("state.csv").exists());
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.cost.is_none() && summary.iterations.is_none());
}

#[test]
fn collision_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let args = [
        "demo",
        "example2",
        "--mode",
        "controlled",
        "--grid",
        "64",
        "--out",
        &out,
    ];
    assert_eq!(frachk(&args).status.code(), Some(0));
    let again = frachk(&args);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(frachk(&forced).status.code(), Some(0));
}

#[test]
fn validate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", frachk::Bundled::Example2.json());
    let o = frachk(&["validate", &good]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("3 agents"));

    let low = frachk::Bundled::Example2
        .json()
        .replace("\"alpha\": 0.6", "\"alpha\": 0.4");
    let bad = write(dir.path(), "bad.json", &low);
    let o = frachk(&["validate", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(1/2, 1)"));

    let missing = dir.path().join("nope.json");
    assert_eq!(
        frachk(&["validate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(frachk(&["run", &bad]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "blow.json",
        r#"{"alpha": 0.6, "T": 1, "nu": 2, "K": 1, "n": 64, "leader": {"x0": 0},
            "agents": [{"x0": -1}, {"x0": 1}], "weights": [[0, 1e308], [1e308, 0]], "couplings": [1e308, 1e308]}"#,
    );
    let out = dir.path().join("out");
    let o = frachk(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("blow.json"));
}

#[test]
fn grid_override_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.json", frachk::Bundled::Example1.json());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = frachk(&["run", &file, "--grid", "96", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in [
        "state.csv",
        "costate.csv",
        "control.csv",
        "uncontrolled_state.csv",
        "summary.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
