use std::process::Command;

use covergen::verify::{Verdict, VerificationReport};
use covergen_cli::{emit_report, exit_code, parse_args, parse_complex, run, Command as Cmd};
use num_complex::Complex64;
use serde_json::Value;

const FIELDS: [&str; 13] = [
    "schema",
    "scenario",
    "params",
    "lhs_re",
    "lhs_im",
    "rhs_re",
    "rhs_im",
    "abs_err",
    "rel_err",
    "converged",
    "coset_count",
    "elapsed_ms",
    "verdict",
];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_verify"));
    c.env_remove("COVERGEN_BUDGET");
    c
}

fn fake(verdict: Verdict) -> VerificationReport {
    let one = Complex64::new(1.0, 0.0);
    VerificationReport {
        scenario: format!("{verdict}"),
        params: Default::default(),
        lhs: one,
        rhs: one,
        abs_err: 0.0,
        rel_err: 0.0,
        converged: verdict != Verdict::Inconclusive,
        coset_count: 1,
        elapsed_ms: 0,
        verdict,
        tolerance: 1e-6,
        raw_lhs: None,
        raw_rhs: None,
        stderr: None,
        tail_bound: None,
        jacobian: Vec::new(),
        notes: Vec::new(),
    }
}

#[test]
fn parses_the_prop2_example() {
    let cfg = parse_args(["verify", "prop2", "--n", "2", "--r", "1", "--prime", "2", "--s", "0.9+0.3i"]).unwrap();
    assert_eq!(cfg.command, Some(Cmd::Prop2));
    assert_eq!(cfg.scenarios.len(), 1);
    assert_eq!(cfg.scenarios[0].s, Some(Complex64::new(0.9, 0.3)));
}

#[test]
fn rejects_bad_parameters() {
    let err = parse_args(["verify", "thm1", "--n", "2", "--r", "3"]).unwrap_err().to_string();
    assert!(err.contains("thm1 requires r<n"), "{err}");
    assert!(parse_args(["verify", "prop2", "--prime", "9"]).is_err());
    assert!(parse_args(["verify", "prop2", "--n", "1"]).is_err());
    assert!(parse_args(["verify", "prop2", "--r", "0"]).is_err());
    assert!(parse_args(["verify", "prop2", "--bogus"]).is_err());
    assert!(parse_args(["verify", "prop2", "--v-min", "-1"]).is_err());
    assert!(parse_args(["verify", "thm2", "--n", "2", "--r", "2", "--torus", "1,0"]).is_err());
    assert!(parse_args(["verify", "prop2", "--chi", "0.5,0.5"]).is_err());
    assert!(parse_args(["verify"]).is_err());
}

#[test]
fn suite_runs_the_default_grid() {
    let cfg = parse_args(["verify", "suite", "--out", "report.json"]).unwrap();
    assert_eq!(cfg.scenarios.len(), covergen::verify::default_grid().len());
    assert_eq!(cfg.out.as_deref(), Some(std::path::Path::new("report.json")));
}

#[test]
fn complex_literals() {
    assert_eq!(parse_complex("0.9+0.3i").unwrap(), Complex64::new(0.9, 0.3));
    assert_eq!(parse_complex("-1-2i").unwrap(), Complex64::new(-1.0, -2.0));
    assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
    assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
    assert_eq!(parse_complex("1e-3+2.5e1i").unwrap(), Complex64::new(1e-3, 25.0));
    assert!(parse_complex("x+1i").is_err());
    assert!(parse_complex("").is_err());
}

#[test]
fn exit_code_lattice() {
    use Verdict::*;
    assert_eq!(exit_code(&[fake(Pass), fake(Pass)]), 0);
    assert_eq!(exit_code(&[fake(Pass), fake(Inconclusive)]), 2);
    assert_eq!(exit_code(&[fake(Inconclusive), fake(Fail)]), 1);
    assert_eq!(exit_code(&[fake(Fail)]), 1);
}

#[test]
fn emit_writes_schema_and_reports_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    assert_eq!(emit_report(&[fake(Verdict::Pass)], Some(&path)), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let obj = &v.as_array().unwrap()[0];
    for f in FIELDS {
        assert!(obj.get(f).is_some(), "missing {f}");
    }
    assert_eq!(obj["schema"], 1);
    assert_eq!(obj["verdict"], "pass");
    let missing = dir.path().join("no/such/dir/r.json");
    assert_eq!(emit_report(&[fake(Verdict::Pass)], Some(&missing)), 3);
}

#[test]
fn library_run_keeps_order() {
    let cfg = parse_args(["verify", "thm1", "--n", "2", "--r", "1", "--torus", "4"]).unwrap();
    let reps = run(&cfg.scenarios);
    assert_eq!(reps.len(), 1);
    assert_eq!(reps[0].verdict, Verdict::Pass);
}

#[test]
fn binary_pass_and_same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("r{i}.json"));
        let st = bin().args(["prop2", "--n", "2", "--r", "1", "--seed", "7", "--out"]).arg(&path).status().unwrap();
        assert_eq!(st.code(), Some(0));
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for o in v.as_array_mut().unwrap() {
            o["elapsed_ms"] = Value::from(0);
        }
        outs.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn binary_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let st = bin().args(["prop2", "--s-prime-shift", "1/4", "--out"]).arg(&path).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v[0]["verdict"], "fail");
}

#[test]
fn binary_budget_env_makes_run_inconclusive() {
    let out = bin().args(["prop2"]).env("COVERGEN_BUDGET", "10").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["verdict"], "inconclusive");
}

#[test]
fn binary_usage_and_io_errors() {
    let out = bin().args(["thm1", "--n", "2", "--r", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thm1 requires r<n"));
    let st = bin().args(["thm1", "--torus", "2", "--out", "/nonexistent-dir/r.json"]).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn binary_lists_scenarios() {
    let out = bin().args(["--list-scenarios"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("prop2(2,2)") && text.contains("scenarios"));
}
