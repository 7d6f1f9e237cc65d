use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_doa-anm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn doa-anm")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const ARRAY1: &str = r#"{"n_x":5,"n_y":5,"alpha_deg":[-25,30],"beta_deg":[-35,0],"snr_db":10,"seed":3}"#;
const ARRAY2: &str =
    r#"{"omega_x":[1,2,3,5],"omega_y":[1,2,3,5],"alpha_deg":[-25,30],"beta_deg":[-35,0],"snr_db":10,"seed":3}"#;

#[test]
fn simulate_shapes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = write(dir.path(), "a1.json", ARRAY1);
    let c2 = write(dir.path(), "a2.json", ARRAY2);
    let o1 = dir.path().join("s1.json");
    let o1b = dir.path().join("s1b.json");
    let o2 = dir.path().join("s2.json");
    for (c, o) in [(&c1, &o1), (&c1, &o1b), (&c2, &o2)] {
        let out = run(&["simulate", "-c", c, "-o", o.to_str().unwrap(), "-L", "40"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&o1).unwrap(), fs::read(&o1b).unwrap());

    let s1: Value = serde_json::from_str(&fs::read_to_string(&o1).unwrap()).unwrap();
    assert_eq!(s1["x"].as_array().unwrap().len(), 5);
    assert_eq!(s1["x"][0].as_array().unwrap().len(), 40);
    let s2: Value = serde_json::from_str(&fs::read_to_string(&o2).unwrap()).unwrap();
    assert_eq!(s2["y"].as_array().unwrap().len(), 4);
    assert_eq!(s2["l"], 40);
}

/// Noiseless snapshots with orthogonal unit-power source sequences, so the
/// sample cross-covariance equals the infinite-snapshot one.
fn orthogonal_noiseless(alpha: &[f64], beta: &[f64]) -> String {
    use doa_anm::array_model::{manifold, ArrayGeometry, Axis, SourceConfig, Snapshots};
    use doa_anm::linalg::CMatrix;
    use num_complex::Complex64;

    let g = ArrayGeometry::uniform(5, 5).unwrap();
    let ax = manifold(Axis::X, alpha, &g).unwrap();
    let ay = manifold(Axis::Y, beta, &g).unwrap();
    // rows of a 4-point Walsh basis
    let walsh = [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0]];
    let s = CMatrix::from_fn(alpha.len(), 4, |k, t| Complex64::new(walsh[k][t], 0.0));
    let snaps = Snapshots {
        geometry: g,
        x: &ax * &s,
        y: &ay * &s,
        l: 4,
        truth: SourceConfig::new(alpha.to_vec(), beta.to_vec(), None, 0).unwrap(),
    };
    serde_json::to_string(&snaps).unwrap()
}

#[test]
fn noiseless_cc_anm_recovers_sources() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = write(dir.path(), "s.json", &orthogonal_noiseless(&[-25.0, 30.0], &[-35.0, 0.0]));
    let out = run(&["estimate", "-i", &snaps, "-m", "cc_anm", "--eta", "1e-8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["k_hat"], 2);
    let pairs: Vec<(f64, f64)> = v["pairs_deg"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect();
    for ((a, b), (ta, tb)) in pairs.iter().zip([(25.0, 35.0), (30.0, 0.0)]) {
        assert!((a - ta).abs() < 0.05 && (b - tb).abs() < 0.05, "{pairs:?}");
    }
}

#[test]
fn simulated_noiseless_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"n_x":5,"n_y":5,"alpha_deg":[-25,30],"beta_deg":[-35,0],"seed":11,"snapshots":500}"#,
    );
    let snaps = dir.path().join("s.json");
    assert!(run(&["simulate", "-c", &cfg, "-o", snaps.to_str().unwrap()]).status.success());
    let out = run(&["estimate", "-i", snaps.to_str().unwrap(), "-m", "cc_anm", "--eta", "1e-8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // finite-L cross terms are not exactly rank two, so extra weak atoms may appear
    let pairs: Vec<(f64, f64)> = v["pairs_deg"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect();
    for (ta, tb) in [(25.0, 35.0), (30.0, 0.0)] {
        assert!(pairs.iter().any(|&(a, b)| (a - ta).abs() < 1.0 && (b - tb).abs() < 2.0), "{pairs:?}");
    }
}

#[test]
fn mcc_anm_on_sparse_array_needs_no_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ARRAY2);
    let snaps = dir.path().join("s.json");
    assert!(run(&["simulate", "-c", &cfg, "-o", snaps.to_str().unwrap(), "-L", "200"]).status.success());
    let out = run(&["estimate", "-i", snaps.to_str().unwrap(), "-m", "mcc_anm", "--tau", "1e-3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "mcc_anm");
    let k = v["k_hat"].as_u64().unwrap() as usize;
    assert_eq!(v["pairs_deg"].as_array().unwrap().len(), k);
    assert_eq!(v["powers"].as_array().unwrap().len(), k);
    assert!(v["powers"].as_array().unwrap().iter().all(|p| p.as_f64().unwrap() > 0.0));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ARRAY1);
    let snaps = dir.path().join("s.json");
    let s = snaps.to_str().unwrap();
    assert!(run(&["simulate", "-c", &cfg, "-o", s, "-L", "20"]).status.success());

    let cases: Vec<Vec<&str>> = vec![
        vec!["estimate", "-i", s, "-m", "cc_anm"],
        vec!["estimate", "-i", s, "-m", "mcc_anm", "--eta", "0.1"],
        vec!["estimate", "-i", s, "-m", "cc_anm", "--eta", "0.1", "--kappa", "0.01"],
        vec!["estimate", "-i", s, "-m", "music"],
        vec!["estimate", "-i", s, "-m", "mcc_anm", "--kappa", "0.9"],
        vec!["estimate", "-i", s, "-m", "mcc_anm", "--tau", "2"],
        vec!["estimate", "-i", "/nonexistent/file.json", "-m", "mcc_anm"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let bad = [
        r#"{"n_x":5}"#,
        r#"{"n_x":5,"n_y":5,"alpha_deg":[95],"beta_deg":[0]}"#,
        r#"{"omega_x":[2,3],"n_y":5,"alpha_deg":[10],"beta_deg":[0]}"#,
        r#"{"n_x":5,"n_y":5,"alpha_deg":[10,20],"beta_deg":[0]}"#,
        "not json",
    ];
    for (i, body) in bad.iter().enumerate() {
        let c = write(dir.path(), &format!("bad{i}.json"), body);
        let out = run(&["simulate", "-c", &c, "-o", dir.path().join("x.json").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
}

#[test]
fn numeric_failure_exits_3() {
    // all-zero snapshots make the plug-in error covariance vanish
    let dir = tempfile::tempdir().unwrap();
    let zeros: Vec<Vec<[f64; 2]>> = vec![vec![[0.0, 0.0]; 10]; 3];
    let snaps = serde_json::json!({
        "geometry": {"n_x": 3, "n_y": 3, "omega_x": [1, 2, 3], "omega_y": [1, 2, 3]},
        "x": zeros, "y": zeros, "l": 10,
        "truth": {"alpha_deg": [10.0], "beta_deg": [20.0]}
    });
    let p = write(dir.path(), "z.json", &snaps.to_string());
    let out = run(&["estimate", "-i", &p, "-m", "mcc_anm"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_writes_rfc4180_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"geometry":{"n_x":4,"n_y":4},"alpha_deg":[20,60],"beta_deg":[40,75],"snr_db":15,
        "snapshot_grid":[30,60],"trials":2,"methods":["cc_anm","mcc_anm"],"eta":"oracle","seed":5}"#;
    let cfg = write(dir.path(), "b.json", spec);
    let out_csv = dir.path().join("run.csv");
    let o = out_csv.to_str().unwrap();
    let out = run(&["bench", "-c", &cfg, "-o", o, "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,L,trial,rmse_deg,solve_seconds,k_hat");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    let summary = fs::read_to_string(dir.path().join("run.summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "method,L,rmse_deg,mean_solve_seconds,trials_used,failures");
    assert_eq!(lines.len(), 1 + 4);

    // same seed, same numbers apart from timing
    let again = dir.path().join("again.csv");
    assert!(run(&["bench", "-c", &cfg, "-o", again.to_str().unwrap(), "--quiet"]).status.success());
    let strip = |t: String| -> Vec<String> {
        t.lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{},{}", f[0], f[1], f[2], f[3], f[5])
            })
            .collect()
    };
    assert_eq!(strip(text), strip(fs::read_to_string(&again).unwrap()));
}

#[test]
fn bench_rejects_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        r#"{"geometry":{"n_x":4,"n_y":4},"alpha_deg":[20],"beta_deg":[40],"snr_db":15,"snapshot_grid":[60,30],"trials":2,"eta":"oracle"}"#,
        r#"{"geometry":{"n_x":4,"n_y":4},"alpha_deg":[20],"beta_deg":[40],"snr_db":15,"snapshot_grid":[30],"trials":0,"eta":"oracle"}"#,
        r#"{"geometry":{"n_x":4,"n_y":4},"alpha_deg":[20],"beta_deg":[40],"snr_db":15,"snapshot_grid":[30],"trials":1}"#,
        r#"{"geometry":{"n_x":4,"n_y":4},"alpha_deg":[20],"beta_deg":[40],"snr_db":15,"snapshot_grid":[30],"trials":1,"eta":"guess"}"#,
    ];
    for (i, s) in specs.iter().enumerate() {
        let c = write(dir.path(), &format!("b{i}.json"), s);
        let out = run(&["bench", "-c", &c, "-o", dir.path().join("o.csv").to_str().unwrap(), "--quiet"]);
        assert_eq!(out.status.code(), Some(2), "{s}");
    }
}
