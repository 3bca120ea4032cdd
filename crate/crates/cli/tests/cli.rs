use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coherence::channels::{rotation_matrix, KrausChannel};
use coherence::io::{read_json, write_json, BundleJson, ChannelJson, StateJson};
use coherence::states::{flower_state, maximally_coherent};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write_state(dir: &TempDir, name: &str, s: &StateJson) -> PathBuf {
    let p = dir.path().join(name);
    write_json(&p, s).unwrap();
    p
}

fn write_channel(dir: &TempDir, name: &str, t: &KrausChannel) -> PathBuf {
    let p = dir.path().join(name);
    write_json(&p, &ChannelJson::from_channel(t)).unwrap();
    p
}

fn compute(dir: &TempDir, file: &Path, measure: &str) -> Output {
    run(&["compute", file.to_str().unwrap(), "--measure", measure], dir.path())
}

#[test]
fn flower_state_measures() {
    let dir = TempDir::new().unwrap();
    let f = write_state(&dir, "flower.json", &StateJson::from_density(&flower_state(2).unwrap()));
    let cr = compute(&dir, &f, "cr");
    assert_eq!(cr.status.code(), Some(0));
    assert!((stdout_json(&cr)["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let cf = compute(&dir, &f, "cf");
    assert_eq!(cf.status.code(), Some(0));
    assert!((stdout_json(&cf)["value"].as_f64().unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn maximally_coherent_ququart() {
    let dir = TempDir::new().unwrap();
    let f = write_state(&dir, "psi4.json", &StateJson::from_pure(&maximally_coherent(4).unwrap()));
    let cr = compute(&dir, &f, "cr");
    assert!((stdout_json(&cr)["value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    let rank = compute(&dir, &f, "rank");
    assert_eq!(rank.status.code(), Some(0));
    assert_eq!(stdout_json(&rank)["value"].as_f64(), Some(4.0));
}

#[test]
fn rank_of_mixed_state_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write_state(&dir, "flower.json", &StateJson::from_density(&flower_state(2).unwrap()));
    let out = compute(&dir, &f, "rank");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pure state"));
}

#[test]
fn simulate_writes_a_reloadable_bundle() {
    let dir = TempDir::new().unwrap();
    let t = KrausChannel::unitary(rotation_matrix(0.3)).unwrap();
    let f = write_channel(&dir, "rot.json", &t);
    for protocol in ["unitary", "teleport", "sio"] {
        let bundle = dir.path().join(format!("{protocol}.json"));
        let out = run(
            &["simulate", f.to_str().unwrap(), "--protocol", protocol, "--out", bundle.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{protocol}: {}", String::from_utf8_lossy(&out.stderr));
        let report = stdout_json(&out);
        assert_eq!(report["pass"], Value::Bool(true));
        assert!(report["choi_distance_upper"].as_f64().unwrap() <= 1e-8);
        let b: BundleJson = read_json(&bundle).unwrap();
        let b = b.to_bundle().unwrap();
        let induced = b.induced_channel().unwrap();
        let (_, hi) = coherence::channels::channel_distance_choi(&induced, &t).unwrap();
        assert!(hi <= 1e-8);
    }
}

#[test]
fn simulate_defaults_to_bundle_json_in_working_directory() {
    let dir = TempDir::new().unwrap();
    let f = write_channel(&dir, "deph.json", &KrausChannel::dephasing(2));
    let out = run(&["simulate", f.to_str().unwrap(), "--protocol", "teleport"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("bundle.json").exists());
}

#[test]
fn sio_uses_a_four_dimensional_resource_for_qubits() {
    let dir = TempDir::new().unwrap();
    let f = write_channel(&dir, "two.json", &KrausChannel::random(2, 2, 2, 9).unwrap());
    let out = run(&["simulate", f.to_str().unwrap(), "--protocol", "sio"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["resource_dim"].as_u64(), Some(4));
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn invalid_state_is_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("unnormalized.json");
    std::fs::write(&bad, r#"{"dim": 2, "rows": 2, "cols": 2, "re": [1, 0, 0, 1], "im": [0, 0, 0, 0]}"#).unwrap();
    let out = run(&["compute", bad.to_str().unwrap(), "--measure", "cr"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sio_rejects_too_many_kraus_operators() {
    let dir = TempDir::new().unwrap();
    let t = KrausChannel::random(2, 2, 3, 5).unwrap();
    let f = write_channel(&dir, "three.json", &t);
    let out = run(&["simulate", f.to_str().unwrap(), "--protocol", "sio"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Kraus"));
    assert!(!dir.path().join("bundle.json").exists());
}

#[test]
fn figures_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = run(&["figures", "--out", d.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["fig1.csv", "fig2.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let fig1 = std::fs::read_to_string(a.join("fig1.csv")).unwrap();
    let lines: Vec<&str> = fig1.lines().collect();
    assert_eq!(lines[0], "theta,cgen,h2_cos2");
    assert_eq!(lines.len(), 51);
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, 0.0, 0.0]);
    let last: Vec<f64> = lines[50].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((last[0] - 0.25).abs() < 1e-12);
    assert!((last[2] - 1.0).abs() < 1e-12);
    assert!(last[1] >= last[2]);
    let fig2 = std::fs::read_to_string(a.join("fig2.csv")).unwrap();
    assert_eq!(fig2.lines().next(), Some("theta,alpha_star"));
    assert_eq!(fig2.lines().count(), 51);
}

#[test]
fn grid_flag_sets_row_count() {
    let dir = TempDir::new().unwrap();
    let out = run(&["figures", "--grid", "5", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let fig1 = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert_eq!(fig1.lines().count(), 6);
}

#[test]
fn missing_and_malformed_files_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = run(&["compute", "nope.json", "--measure", "cr"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"rows\": 2}").unwrap();
    let out = run(&["compute", bad.to_str().unwrap(), "--measure", "cr"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", bad.to_str().unwrap(), "--protocol", "teleport"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_positive_flags_exit_2() {
    let dir = TempDir::new().unwrap();
    for args in [["verify", "--restarts", "0"], ["verify", "--tol", "0"], ["figures", "--grid", "0"]] {
        let out = run(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_feasibility_reports_balanced_minimum() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify", "--suite", "feasibility"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    let tables = r["feasibility"].as_array().unwrap();
    assert_eq!(tables.len(), 3);
    for t in tables {
        let argmin = t["argmin_c_prime"].as_f64().unwrap();
        assert!((argmin - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        assert_eq!(t["rows"].as_array().unwrap().len(), 200);
    }
}

#[test]
fn verify_all_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = stdout_json(&out);
    assert_eq!(r["failed"].as_u64(), Some(0));
    assert!(r["checks"].as_array().unwrap().len() >= 20);
}
