//! End-to-end checks of the binary: byte-level determinism, exit codes, and
//! the file formats the CLI promises.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyquant"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn gaussian_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("exp.json");
    write(
        &path,
        &format!(
            r#"{{
        "name": "t",
        "models": [{{"kind": "gaussian_lk", "sigma": 1.0, "mu": 0.0}}],
        "schedule": {{"generator": "explicit", "points": [[1, 64], [4, 128]]}},
        "sample_count": 60000,
        "seed": 5,
        "shards": 16{extra}
    }}"#
        ),
    );
    path
}

#[test]
fn converge_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gaussian_config(dir.path(), "");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, workers) in [(&out_a, "1"), (&out_b, "4")] {
        let status = bin()
            .args(["converge", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--out-dir"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv_a = std::fs::read(out_a.join("t_convergence.csv")).unwrap();
    let csv_b = std::fs::read(out_b.join("t_convergence.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "worker count changed output bytes");

    // Rerun in place: still identical.
    let status = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .args(["--workers", "2", "--out-dir"])
        .arg(&out_a)
        .status()
        .unwrap();
    assert!(status.success());
    let csv_c = std::fs::read(out_a.join("t_convergence.csv")).unwrap();
    assert_eq!(csv_a, csv_c, "rerun changed output bytes");

    // A different seed must change the measurements.
    let status = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .args(["--seed", "6", "--out-dir"])
        .arg(&out_b)
        .status()
        .unwrap();
    assert!(status.success());
    let csv_d = std::fs::read(out_b.join("t_convergence.csv")).unwrap();
    assert_ne!(csv_a, csv_d);
}

#[test]
fn required_assertions_drive_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // Impossible residual bound: required -> nonzero exit.
    let cfg = gaussian_config(
        dir.path(),
        r#", "assertions": {"required": true, "max_abs_residual_final": 1e-9}"#,
    );
    let status = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path().join("req"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Same bound, not required -> exit 0 but recorded in the manifest.
    let cfg = gaussian_config(
        dir.path(),
        r#", "assertions": {"required": false, "max_abs_residual_final": 1e-9}"#,
    );
    let out = dir.path().join("opt");
    let status = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("t_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["assertion_failures"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["correction"], "miller_madow");
    assert!(manifest["models"].as_array().is_some());
}

#[test]
fn degenerate_model_emits_table_without_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    write(
        &path,
        r#"{
        "name": "deg",
        "models": [{"kind": "gaussian_lk", "sigma": 0.0, "mu": 0.0}],
        "schedule": {"generator": "explicit", "points": [[1, 2], [4, 4]]},
        "sample_count": 5000,
        "seed": 1
    }"#,
    );
    let status = bin()
        .args(["converge", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("deg_convergence.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "n,m,h_emp,h_pred,kappa,zeta,residual,stderr,model_hash,seed,sample_count"
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "0.000000000000e0", "degenerate entropy is exactly 0");
        assert!(cols[3].is_empty() && cols[5].is_empty(), "no prediction columns");
    }
}

#[test]
fn identical_models_compare_to_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    write(
        &path,
        r#"{
        "name": "same",
        "models": [
            {"kind": "impulsive_poisson", "lambda": 1.0,
             "amplitude": {"ac": {"kind": {"family": "uniform", "lo": 0.0, "hi": 1.0}, "mass": 1.0}}},
            {"kind": "impulsive_poisson", "lambda": 1.0,
             "amplitude": {"ac": {"kind": {"family": "uniform", "lo": 0.0, "hi": 1.0}, "mass": 1.0}}}
        ],
        "schedule": {"generator": "explicit", "points": [[1, 8], [2, 16]]},
        "sample_count": 40000,
        "seed": 3,
        "shards": 8
    }"#,
    );
    let status = bin()
        .args(["compare", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("same_comparison.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], "1.000000000000e0", "ratio must be exactly 1");
        assert_eq!(cols[5], "0.000000000000e0", "difference must be exactly 0");
    }
}

#[test]
fn codec_roundtrip_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    write(
        &path,
        r#"{
        "name": "cdc",
        "models": [{"kind": "gaussian_lk", "sigma": 1.0, "mu": 0.0}],
        "schedule": {"generator": "explicit", "points": [[1, 32]]},
        "sample_count": 30000,
        "seed": 9
    }"#,
    );
    let status = bin()
        .args(["codec", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("cdc_codec.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "30000");
    assert_eq!(row[7], "true");
    let rate: f64 = row[4].parse().unwrap();
    let h: f64 = row[5].parse().unwrap();
    assert!(rate >= h - 0.05 && rate <= h * 1.1 + 0.1, "rate {rate} vs H {h}");
}

#[test]
fn sample_dump_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    write(
        &path,
        r#"{
        "name": "dump",
        "models": [{"kind": "stable", "alpha": 1.5, "beta": 0.0, "sigma": 1.0, "mu": 0.0}],
        "sample": {"n": 4, "count": 2500},
        "seed": 21
    }"#,
    );
    let status = bin()
        .args(["sample", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let bytes = std::fs::read(dir.path().join("dump_samples.f64le")).unwrap();
    assert_eq!(bytes.len(), 2500 * 8);
    let first = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
    assert!(first.is_finite());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dump_samples.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["n"], 4);
    assert_eq!(sidecar["count"], 2500);
    assert_eq!(sidecar["seed"], 21);
    assert_eq!(sidecar["format"], "f64le");
    assert_eq!(sidecar["model"]["kind"], "stable");
}

#[test]
fn density_of_unit_gaussian_peaks_correctly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    write(
        &path,
        r#"{
        "name": "dens",
        "models": [{"kind": "gaussian_lk", "sigma": 1.0, "mu": 0.0}],
        "density": {"window": [-12.0, 12.0], "points": 4096, "n": 1},
        "seed": 0
    }"#,
    );
    let status = bin()
        .args(["density", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("dens_density.csv")).unwrap();
    let mut best = (f64::INFINITY, 0.0);
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let x: f64 = cols[0].parse().unwrap();
        let p: f64 = cols[1].parse().unwrap();
        if x.abs() < best.0 {
            best = (x.abs(), p);
        }
    }
    assert!((best.1 - 0.3989).abs() < 1e-3, "p(0) = {}", best.1);
}
