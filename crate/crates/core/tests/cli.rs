use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade-lab"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn write_model(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn predict_lognormal_satisfies_the_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "m.model", "kind = lognormal-signed\nb = 2\nalpha = 1\nbeta = 0.25\nsigns = independent\n");
    let out = run(dir.path(), &["predict", "--model", "m.model", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/predict.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "xi0,xi,zeta,xistar,predicted_dim,branch");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').take(5).map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 65);
    for r in rows {
        let (xi0, xi) = (r[0], r[1]);
        assert!((xi0 - xi - 0.25 * xi * (1.0 - xi)).abs() <= 1e-8, "{r:?}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/predict.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "predict");
    assert_eq!(manifest["model_kind"], "lognormal-signed");
}

#[test]
fn check_model_flags_a_failing_assumption() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "m.model", "kind = lognormal-signed\nb = 2\nalpha = 0.7\nbeta = 0.25\nsigns = independent\n");
    let out = run(dir.path(), &["check-model", "--model", "m.model", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/check-model.json")).unwrap()).unwrap();
    assert_eq!(report["a1_ok"], false);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 3);

    let out = run(dir.path(), &["predict", "--model", "m.model", "--out", "p"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("p/predict.csv").exists());
    let out = run(dir.path(), &["predict", "--model", "m.model", "--out", "p", "--force"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(dir.path(), &["predict", "--model", "m.model", "--out", "p", "--force", "--xi0-grid", "0.1,0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn image_dim_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "m.model", "kind = fractional\nb = 2\nalpha1 = 0.75\nalpha2 = 0.75\nsigns = independent\n");
    let args = |o: &'static str| ["image-dim", "--model", "m.model", "--depth", "12", "--seeds", "2", "--set", "cantor:01:4", "--out", o];
    assert!(run(dir.path(), &args("a")).status.success());
    assert!(run(dir.path(), &args("b")).status.success());
    for name in ["image-dim-counts.csv", "image-dim-summary.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn usage_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["image-dim", "--scales", "9:3", "--model", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(run(dir.path(), &["--help"]).status.success());
}

#[test]
fn simulate_keeps_an_existing_cache_entry() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "m.model", "kind = fractional\nb = 2\nalpha1 = 0.8\nalpha2 = 0.7\nsigns = independent\n");
    let args = ["simulate", "--model", "m.model", "--depth", "8", "--cache", "--out", "o"];
    assert!(run(dir.path(), &args).status.success());
    let cache = fs::read_dir(dir.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "bin"))
        .unwrap();
    fs::write(&cache, b"foreign").unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(fs::read(&cache).unwrap(), b"foreign");
}
