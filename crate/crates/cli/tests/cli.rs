use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gksl-sim"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn zero3() -> Value {
    json!([[0, 0, 0], [0, 0, 0], [0, 0, 0]])
}

fn config(h_re: Value, a_re: Value, a_im: Value, time: f64, epsilon: f64, bloch: [f64; 3]) -> Value {
    json!({
        "hamiltonian": {"re": h_re},
        "gks_matrix": {"re": a_re, "im": a_im},
        "time": time,
        "epsilon": epsilon,
        "initial_state": {"bloch": bloch},
    })
}

fn write_config(dir: &TempDir, name: &str, v: &Value) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

/// `a a†` for `a = (cos θ, −i sin θ, 0)` as re/im blocks.
fn canonical_blocks(theta: f64) -> (Value, Value) {
    let (co, si) = (theta.cos(), theta.sin());
    (
        json!([[co * co, 0, 0], [0, si * si, 0], [0, 0, 0]]),
        json!([[0, co * si, 0], [-co * si, 0, 0], [0, 0, 0]]),
    )
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,bloch_x,bloch_y,bloch_z,oracle_trace_distance"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn decompose_zero_dissipator() {
    let dir = TempDir::new().unwrap();
    let cfg = config(json!([[0.3, 0], [0, -0.3]]), zero3(), zero3(), 1.0, 0.1, [0.0, 0.0, 1.0]);
    let out = run(&["decompose", &write_config(&dir, "a0.json", &cfg)]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["terms"], json!([]));
    assert_eq!(v["reconstruction_residual"], json!(0.0));
}

#[test]
fn decompose_canonical_term() {
    let dir = TempDir::new().unwrap();
    let (re, im) = canonical_blocks(std::f64::consts::FRAC_PI_4);
    let cfg = config(json!([[0, 0], [0, 0]]), re, im, 1.0, 0.1, [0.0, 0.0, 1.0]);
    let out = run(&["decompose", &write_config(&dir, "c.json", &cfg)]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    assert!((terms[0]["theta"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    assert!((terms[0]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn decompose_example_to_file() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("dec.json");
    let out = run(&["decompose", bundled("example.json").to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(v["reconstruction_residual"].as_f64().unwrap() < 1e-9);
    for t in v["terms"].as_array().unwrap() {
        assert!(t["theta"].as_f64().unwrap().abs() <= std::f64::consts::FRAC_PI_4 + 1e-12);
    }
}

#[test]
fn compile_zero_time_is_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = bundled("example.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(cfg).unwrap()).unwrap();
    v["time"] = json!(0.0);
    let qasm = dir.path().join("out.qasm");
    let out = run(&["compile", &write_config(&dir, "t0.json", &v), "--qasm", qasm.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["channel_invocations"], json!(0));
    let text = std::fs::read_to_string(qasm).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with("//")).collect();
    assert_eq!(body, ["OPENQASM 2.0;", "include \"qelib1.inc\";", "qreg q[1];"]);
}

#[test]
fn compile_step_count_fixture() {
    let dir = TempDir::new().unwrap();
    let qasm = dir.path().join("out.qasm");
    let report = dir.path().join("report.json");
    let out = run(&[
        "compile",
        bundled("step_count.json").to_str().unwrap(),
        "--qasm",
        qasm.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(r["channel_invocations"].as_u64().unwrap() <= 7 * 47);
    let text = std::fs::read_to_string(qasm).unwrap();
    assert!(text.contains("steps N = 47"));
}

/// Minimal grammar for the emitted subset: declarations, then one gate per
/// line on declared qubits.
#[test]
fn compile_output_parses_and_matches_report() {
    let out = run(&["compile", bundled("example.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with("//"));
    assert_eq!(lines.next(), Some("OPENQASM 2.0;"));
    assert_eq!(lines.next(), Some("include \"qelib1.inc\";"));
    let decl = lines.next().unwrap();
    let n: usize = decl.strip_prefix("qreg q[").and_then(|s| s.strip_suffix("];")).unwrap().parse().unwrap();
    let (mut one, mut cx, mut ccx) = (0u64, 0u64, 0u64);
    for l in lines {
        let l = l.strip_suffix(';').unwrap_or_else(|| panic!("missing semicolon: {l}"));
        let (head, args) = l.split_once(' ').unwrap();
        let qubits: Vec<usize> = args
            .split(',')
            .map(|a| a.strip_prefix("q[").and_then(|s| s.strip_suffix(']')).unwrap().parse().unwrap())
            .collect();
        assert!(qubits.iter().all(|&q| q < n));
        let name = head.split('(').next().unwrap();
        if let Some(angle) = head.strip_prefix(name) {
            if !angle.is_empty() {
                let a: f64 = angle.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap().parse().unwrap();
                assert!(a.is_finite());
            }
        }
        match (name, qubits.len()) {
            ("x" | "ry" | "rz", 1) => one += 1,
            ("cx", 2) => cx += 1,
            ("ccx", 3) => ccx += 1,
            other => panic!("unexpected gate {other:?}"),
        }
    }
    assert_eq!(report["one_qubit"].as_u64().unwrap(), one);
    assert_eq!(report["cnot"].as_u64().unwrap(), cx);
    assert_eq!(report["ccnot"].as_u64().unwrap(), ccx);
}

#[test]
fn simulate_precession_keeps_length() {
    let dir = TempDir::new().unwrap();
    let cfg = config(json!([[0.4, 0.3], [0.3, -0.4]]), zero3(), zero3(), 2.0, 0.01, [0.6, 0.0, 0.8]);
    let csv = dir.path().join("t.csv");
    let out = run(&["simulate", &write_config(&dir, "h.json", &cfg), "--trajectory", csv.to_str().unwrap()]);
    assert!(out.status.success());
    for row in csv_rows(&std::fs::read_to_string(csv).unwrap()) {
        let len = (row[1] * row[1] + row[2] * row[2] + row[3] * row[3]).sqrt();
        assert!((len - 1.0).abs() < 1e-9, "length {len}");
    }
}

#[test]
fn simulate_amplitude_damping_relaxes() {
    let out = run(&["simulate", bundled("amplitude_damping.json").to_str().unwrap()]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][3], -1.0);
    for w in rows.windows(2) {
        assert!(w[1][3] > w[0][3], "z must increase toward the ground state");
    }
    for r in &rows {
        // z(t) = 1 − 2e^{−2t}
        assert!((r[3] - (1.0 - 2.0 * (-2.0 * r[0]).exp())).abs() < 0.01);
        assert!(r[4] <= 0.01 + 1e-7);
    }
    assert!(summary["max_oracle_distance"].as_f64().unwrap() <= 0.01 + 1e-7);
}

#[test]
fn smaller_epsilon_is_no_worse() {
    let dir = TempDir::new().unwrap();
    let base: Value = serde_json::from_str(&std::fs::read_to_string(bundled("example.json")).unwrap()).unwrap();
    let distance = |eps: f64, name: &str| {
        let mut v = base.clone();
        v["epsilon"] = json!(eps);
        let out = run(&["simulate", &write_config(&dir, name, &v)]);
        assert!(out.status.success());
        serde_json::from_slice::<Value>(&out.stderr).unwrap()["max_oracle_distance"].as_f64().unwrap()
    };
    let coarse = distance(0.05, "coarse.json");
    let fine = distance(0.005, "fine.json");
    assert!(fine <= coarse, "fine {fine} coarse {coarse}");
}

#[test]
fn verify_example_passes() {
    let out = run(&["verify", bundled("example.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], json!(true));
    assert!(v["measured_error"].as_f64().unwrap() <= v["theoretical_bound"].as_f64().unwrap());
}

#[test]
fn bad_epsilon_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config(json!([[0, 0], [0, 0]]), zero3(), zero3(), 1.0, 2.0, [0.0, 0.0, 1.0]);
    let out = run(&["verify", &write_config(&dir, "e.json", &cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("epsilon must lie in (0, 1]"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn indefinite_gks_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = config(json!([[0, 0], [0, 0]]), json!([[0.5, 0, 0], [0, 0.2, 0], [0, 0, -0.5]]), zero3(), 1.0, 0.1, [0.0, 0.0, 1.0]);
    let path = write_config(&dir, "a.json", &cfg);
    for cmd in ["decompose", "compile", "simulate", "verify"] {
        let out = run(&[cmd, &path]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains("not positive semidefinite"), "{err}");
    }
}

#[test]
fn schema_violation_exits_2() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"hamiltonian": {"re": [[0,0],[0,0]]}}"#).unwrap();
    let out = run(&["decompose", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decompose", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_hermitian_hamiltonian_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = config(json!([[0, 1], [0, 0]]), zero3(), zero3(), 1.0, 0.1, [0.0, 0.0, 1.0]);
    let out = run(&["decompose", &write_config(&dir, "h.json", &cfg)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = bundled("example.json");
    let cfg = cfg.to_str().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let q = dir.path().join(format!("{i}.qasm"));
        let c = dir.path().join(format!("{i}.csv"));
        let r = dir.path().join(format!("{i}.json"));
        assert!(run(&["compile", cfg, "--qasm", q.to_str().unwrap()]).status.success());
        assert!(run(&["simulate", cfg, "--trajectory", c.to_str().unwrap(), "--report", r.to_str().unwrap()]).status.success());
        files.push([q, c, r].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn tolerance_env_override() {
    let dir = TempDir::new().unwrap();
    // slightly indefinite: rejected at the default tolerance, accepted at 1e-3
    let cfg = config(json!([[0, 0], [0, 0]]), json!([[0.5, 0, 0], [0, 0.2, 0], [0, 0, -1e-6]]), zero3(), 1.0, 0.1, [0.0, 0.0, 1.0]);
    let path = write_config(&dir, "tol.json", &cfg);
    assert_eq!(run(&["decompose", &path]).status.code(), Some(3));
    let out = bin().args(["decompose", &path]).env("LF_TOL", "1e-3").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
