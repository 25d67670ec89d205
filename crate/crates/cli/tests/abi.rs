//! Command-line contract, checked against the built binary.

mod cli_laws;

use cli_laws::{limavg, stdout, write};
use serde_json::{json, Value};
use tempfile::TempDir;

fn gadget(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let mut full = vec!["gadget"];
    full.extend_from_slice(args);
    let out = limavg(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join(name);
    std::fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn three_branch_distance() {
    let dir = TempDir::new().unwrap();
    let a1 = gadget(&dir, "a1.json", &["fig3", "--variant", "1"]);
    let a2 = gadget(&dir, "a2.json", &["fig3", "--variant", "2"]);
    let out = limavg(&["distance", "-a", &a1, "-b", &a2]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("total = 1/6\n"), "{}", stdout(&out));
    let doc: Value = serde_json::from_str(&stdout(&limavg(&["--json", "distance", "-a", &a1, "-b", &a2]))).unwrap();
    assert_eq!(doc["total"], "1/6");
}

#[test]
fn equivalence_exit_codes() {
    let dir = TempDir::new().unwrap();
    let a1 = gadget(&dir, "a1.json", &["fig3", "--variant", "1"]);
    let a2 = gadget(&dir, "a2.json", &["fig3", "--variant", "2"]);
    let same = limavg(&["equiv", "-a", &a1, "-b", &a1]);
    assert_eq!(same.status.code(), Some(0));
    assert_eq!(stdout(&same), "equivalent\n");
    let differ = limavg(&["equiv", "-a", &a1, "-b", &a2]);
    assert_eq!(differ.status.code(), Some(3));
    assert!(stdout(&differ).starts_with("not equivalent"));
}

#[test]
fn rigid_fig4() {
    let dir = TempDir::new().unwrap();
    let a = gadget(&dir, "a.json", &["fig4", "--n", "3", "--variant", "a"]);
    let l = gadget(&dir, "l.json", &["fig4", "--n", "3", "--variant", "large"]);
    let out = limavg(&["--json", "rigid", "-a", &a, "-b", &l, "--eps", "1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["within"], true);
}

#[test]
fn unsatisfiable_fit_is_none() {
    let dir = TempDir::new().unwrap();
    let cnf = dir.path().join("phi.cnf");
    std::fs::write(&cnf, "p cnf 2 2\n1 0\n-1 0\n").unwrap();
    let sample = gadget(&dir, "s.json", &["sat0-u", "--cnf", cnf.to_str().unwrap()]);
    let out = limavg(&["fit", "-s", &sample, "--max-states", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout(&out).trim(), "none");
    let tree = limavg(&["fit", "-s", &sample, "--tree"]);
    assert_eq!(tree.status.code(), Some(0));
}

#[test]
fn satisfiable_fit_checks() {
    let dir = TempDir::new().unwrap();
    let cnf = dir.path().join("phi.cnf");
    std::fs::write(&cnf, "p cnf 2 2\n1 2 0\n-2 0\n").unwrap();
    let sample = gadget(&dir, "s.json", &["sat0-u", "--cnf", cnf.to_str().unwrap()]);
    let out = limavg(&["fit", "-s", &sample, "--max-states", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["states"], 2);
}

#[test]
fn sample_seed_is_recorded() {
    let dir = TempDir::new().unwrap();
    let a1 = gadget(&dir, "a1.json", &["fig3", "--variant", "1"]);
    let run = |seed: &str| limavg(&["--seed", seed, "sample", "--hidden", &a1, "--kind", "E", "--count", "6"]);
    let (x, y, z) = (run("7"), run("7"), run("8"));
    assert_eq!(x.stdout, y.stdout);
    assert_ne!(x.stdout, z.stdout);
    let doc: Value = serde_json::from_str(&stdout(&x)).unwrap();
    assert_eq!(doc["seed"], 7);
}

#[test]
fn learn_recovers_minimal() {
    let dir = TempDir::new().unwrap();
    let a1 = gadget(&dir, "a1.json", &["fig3", "--variant", "1"]);
    let out = limavg(&["learn", "--hidden", &a1, "--stats"]);
    assert_eq!(out.status.code(), Some(0));
    let h: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(h["states"], 4);
    let stats: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(stats["expectation_queries"].as_u64().unwrap() > 0);
}

#[test]
fn malformed_input_exit_code() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"alphabet": ["a"], "states": 2, "initial": 0, "transitions": []}));
    let out = limavg(&["eval", "-a", &bad, "--v", "a"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(limavg(&["eval"]).status.code(), Some(1));
    assert_eq!(limavg(&["eval", "-a", "/nonexistent.json", "--v", "a"]).status.code(), Some(2));
}

#[test]
fn unreduced_weights_print_reduced() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &cli_laws::automaton_doc(1, &[0], &[(1, 2, 3)]));
    let out = limavg(&["--json", "eval", "-a", &a, "--v", "a"]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["value"], "1/2");
    assert_eq!(stdout(&limavg(&["--decimal", "3", "eval", "-a", &a, "--v", "a"])), "value = 1/2 (~ 0.500)\n");
}

#[test]
fn same_seed_same_bytes() {
    cli_laws::same_seed_same_bytes().unwrap();
}

#[test]
fn own_output_round_trip() {
    cli_laws::own_output_round_trip().unwrap();
}
