use std::path::Path;
use std::process::{Command, Output};

const EXAMPLE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../core/data/worked_example.json"
);

fn qkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkf"))
        .args(args)
        .env_remove("QKF_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_example_exact() {
    let r = stdout_json(&qkf(&["run", EXAMPLE]));
    let traj = r["trajectory"].as_array().unwrap();
    assert_eq!(traj.len(), 2);
    let xq: Vec<f64> = serde_json::from_value(traj[1]["x_quantum"].clone()).unwrap();
    let xc: Vec<f64> = serde_json::from_value(traj[1]["x_classical"].clone()).unwrap();
    assert!((xc[0] - 8.0 / 13.0).abs() < 1e-10 && (xc[1] - 1.75).abs() < 1e-10);
    assert!((xq[0] - 0.6154).abs() < 2e-2 && (xq[1] - 1.75).abs() < 2e-2);
    assert_eq!(r["qsvt"][0]["degree"], 53);
    assert!(r.get("sampling").is_none());
    let labels: Vec<&str> = r["ledger"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels.first(), Some(&"alpha_31"));
    assert_eq!(labels.last(), Some(&"alpha_p"));
    assert_eq!(r["operations"][0]["x_hat"]["qubits"], 14);
}

#[test]
fn run_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    let args = [
        "run",
        EXAMPLE,
        "--readout",
        "sampled",
        "--iterations",
        "3",
        "--seed",
        "11",
        "--csv-dir",
        csv.to_str().unwrap(),
    ];
    let a = qkf(&args);
    let b = qkf(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = stdout_json(&a);
    assert_eq!(r["sampling"]["seed"], 11);

    let traj = std::fs::read_to_string(csv.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 3);
    let hist = std::fs::read_to_string(csv.join("histogram.csv")).unwrap();
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 16384 * 3);
    let ledger = std::fs::read_to_string(csv.join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("step,label,alpha,ancillas,eps\n1,alpha_31,"));
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(EXAMPLE).unwrap()).unwrap();
    cfg.as_object_mut().unwrap().remove("seed");
    cfg["readout_mode"] = "sampled".into();
    cfg["iterations"] = 1.into();
    let path = write(dir.path(), "c.json", &cfg.to_string());
    let out = Command::new(env!("CARGO_BIN_EXE_qkf"))
        .args(["run", &path])
        .env("QKF_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["sampling"]["seed"], 77);
}

#[test]
fn exit_codes_by_category() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", "{}");
    let out = qkf(&["run", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`A`"));

    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(EXAMPLE).unwrap()).unwrap();
    cfg["B"] = serde_json::json!([[1], [1], [1]]);
    let bad_b = write(dir.path(), "b.json", &cfg.to_string());
    let out = qkf(&["run", &bad_b]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains('B'));

    let out = qkf(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));

    let m = write(dir.path(), "m.csv", "13,0\n0,4\n");
    let out = qkf(&["invert", &m, "--kappa", "2", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn encode_prints_block() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "a.csv", "1,-1\n1,1\n");
    let r = stdout_json(&qkf(&["encode", &m]));
    assert!((r["alpha"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(r["ancillas"], 1);
    assert!((r["block"][0][1].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!((r["decoded"][1][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn invert_matches_classical_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.csv", "13,0\n0,4\n");
    let r = stdout_json(&qkf(&["invert", &m, "--kappa", "3.5", "--eps", "0.01"]));
    assert!(r["max_abs_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(r["info"]["degree"], 53);
}

#[test]
fn angles_round_trip() {
    let out = qkf(&["angles", "--kappa", "3.5", "--eps", "0.01"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let phi: qkf::qsvt::PhaseFactors = text.parse().unwrap();
    assert_eq!(phi.degree(), 53);
    let out = qkf(&[
        "angles",
        "--kappa",
        "3.5",
        "--eps",
        "0.01",
        "--degree-cap",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(4));
}
