//! Laws about the command-line tool, run against the built binary.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use limavg::rational::parse_rational;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const CASES: u32 = 1000;

pub fn limavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limavg")).args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

pub fn write(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

/// An automaton document whose weights are written unreduced, as `(p·m)/(q·m)`.
pub fn automaton_doc(k: usize, delta: &[usize], weights: &[(i64, i64, i64)]) -> Value {
    let letters: Vec<String> = (0..k).map(|a| ((b'a' + a as u8) as char).to_string()).collect();
    let n = delta.len() / k;
    let rows: Vec<Value> = (0..n * k)
        .map(|i| {
            let (p, q, m) = weights[i];
            json!([i / k, letters[i % k], delta[i], format!("{}/{}", p * m, q * m)])
        })
        .collect();
    json!({"alphabet": letters, "states": n, "initial": 0, "transitions": rows})
}

fn raw_automaton() -> impl Strategy<Value = (usize, Vec<usize>, Vec<(i64, i64, i64)>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(k, n)| {
        (Just(k), vec(0..n, n * k), vec((-8i64..=8, 1i64..=8, 1i64..=4), n * k))
    })
}

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Every string in the document that reads as a rational is printed in lowest terms.
pub fn rationals_reduced(v: &Value) -> Result<(), String> {
    match v {
        Value::String(s) => match parse_rational(s) {
            Ok(x) if x.to_string() != *s => Err(format!("{s} is not in lowest terms")),
            _ => Ok(()),
        },
        Value::Array(xs) => xs.iter().try_for_each(rationals_reduced),
        Value::Object(m) => m.values().try_for_each(rationals_reduced),
        _ => Ok(()),
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($fmt)+)));
        }
    };
}

/// The same arguments and seed print the same bytes.
pub fn same_seed_same_bytes() -> Result<(), String> {
    let dir = TempDir::new().unwrap();
    run((raw_automaton(), any::<u64>(), 0usize..3), |((k, d, w), seed, kind)| {
        let a = write(dir.path(), "a.json", &automaton_doc(k, &d, &w));
        let seed = seed.to_string();
        let kind = ["U", "E", "En"][kind];
        let args = ["--json", "--seed", &seed, "sample", "--hidden", &a, "--kind", kind, "--count", "4", "--n", "2"];
        let (x, y) = (limavg(&args), limavg(&args));
        ensure!(x.status.success(), "sample failed: {}", String::from_utf8_lossy(&x.stderr));
        ensure!(x.stdout == y.stdout, "outputs differ for seed {seed}");
        Ok(())
    })
}

/// Output rationals are reduced, and feeding an output back in reproduces its values.
pub fn own_output_round_trip() -> Result<(), String> {
    let dir = TempDir::new().unwrap();
    run(raw_automaton(), |(k, d, w)| {
        let a = write(dir.path(), "a.json", &automaton_doc(k, &d, &w));
        let out = limavg(&["--json", "minimize", "-a", &a]);
        ensure!(out.status.success(), "minimize failed");
        let doc: Value = serde_json::from_str(&stdout(&out)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        rationals_reduced(&doc).map_err(TestCaseError::fail)?;
        let m = write(dir.path(), "m.json", &doc);
        let again = limavg(&["--json", "minimize", "-a", &m]);
        ensure!(again.stdout == out.stdout, "minimizing the output changed it");
        let dist = limavg(&["--json", "distance", "-a", &a, "-b", &m]);
        let report: Value = serde_json::from_str(&stdout(&dist)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        rationals_reduced(&report).map_err(TestCaseError::fail)?;
        ensure!(report["total"] == "0", "distance to own minimization is {}", report["total"]);
        Ok(())
    })
}

pub fn all() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![("same_seed_same_bytes", same_seed_same_bytes), ("own_output_round_trip", own_output_round_trip)]
}
