use std::path::PathBuf;
use std::process::{Command, Output};

fn finehyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finehyp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch_file(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finehyp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn delta_of_a_tree_is_zero() {
    let out = finehyp(&["delta", "--gen", "tree:30", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"delta\": 0"), "{text}");
}

#[test]
fn delta_from_edge_list_file() {
    let path = scratch_file("c6.txt");
    std::fs::write(&path, "0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n").unwrap();
    let out = finehyp(&["delta", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("\"delta\": 1"));
}

#[test]
fn disconnected_file_is_a_usage_error() {
    let path = scratch_file("split.txt");
    std::fs::write(&path, "0 1\n2 3\n").unwrap();
    let out = finehyp(&["delta", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("disconnected"));
}

#[test]
fn planted_counterexample_fails_with_witness() {
    let out = finehyp(&[
        "audit", "--gen", "cycle:6", "--delta", "0", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("geodesic_forcing_12delta,"))
        .unwrap();
    assert!(line.contains(",false,"), "{line}");
    assert_eq!(line.rsplit(',').next().unwrap().split(' ').count(), 3);
}

#[test]
fn coned_audit_passes() {
    let out = finehyp(&["audit", "--gen", "Z*Z", "--radius", "4"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn verify_writes_output_file() {
    let path = scratch_file("verify.json");
    let out = finehyp(&[
        "verify",
        "--gen",
        "Z2*Z3",
        "--radius",
        "4",
        "--word",
        "ab",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"cocycle_growth\""));
    assert!(text.contains("\"K\": 10"));
}

#[test]
fn tree_oracle_verify() {
    let out = finehyp(&[
        "verify",
        "--gen",
        "tree:40",
        "--tree-oracle",
        "--max-n",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("partition_tree_oracle"));
}

#[test]
fn budget_and_usage_errors_exit_2() {
    let out = finehyp(&[
        "delta",
        "--gen",
        "Z*Z",
        "--radius",
        "5",
        "--budget-vertices",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(finehyp(&["verify"]).status.code(), Some(2));
    assert_eq!(finehyp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        finehyp(&["delta", "--gen", "cycle:5", "--graph", "x"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn report_is_reproducible() {
    let a = finehyp(&["report", "--seed", "3", "--format", "csv"]);
    let b = finehyp(&["report", "--seed", "3", "--format", "csv"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("# summary\nfixture,vertices,edges,delta,K,passed,checks\n"));
}
