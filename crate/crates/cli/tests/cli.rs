use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bernsim"));
    c.env_remove("BERNSIM_OUTPUT_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON record")
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[experiment]\nkind = \"voronovskaya\"\nseed = 1\n\n[space]\nd = 2\n\n[sweep]\nn = \"many\"\n\n[function]\nbuiltin = \"square\"\n",
    )
    .unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_json(&out);
    assert_eq!(rec["status"], "config error");
    assert_eq!(rec["field"], "sweep.n");
}

#[test]
fn missing_config_is_an_io_error() {
    let out = bin()
        .arg("validate")
        .arg("/nonexistent/x.toml")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["status"], "io error");
}

#[test]
fn validate_accepts_every_shipped_config() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn voronovskaya_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(config("voronovskaya.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let line: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(line["summary"]["all_pass"], true);

    let text = std::fs::read_to_string(dir.path().join("voronovskaya.csv")).unwrap();
    let residual = csv_column(&text, "residual");
    assert_eq!(residual.len(), 5);
    // x^3 at d = 2: the residual is max |x(1-x)(1-2x)| / n = (sqrt(3)/18) / n
    for (r, n) in residual.iter().zip([20.0, 40.0, 80.0, 160.0, 320.0]) {
        let sup = (0..=50)
            .map(|i| {
                let x = i as f64 / 50.0;
                (x * (1.0 - x) * (1.0 - 2.0 * x)).abs()
            })
            .fold(0.0, f64::max);
        assert!((r - sup / n).abs() < 1e-9 * sup / n);
    }
}

#[test]
fn semigroup_error_decreases_at_unit_time() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("run")
        .arg(config("semigroup-rate.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("semigroup-rate.csv")).unwrap();
    let t = csv_column(&text, "t");
    let err = csv_column(&text, "error");
    let at_one: Vec<f64> = t
        .iter()
        .zip(&err)
        .filter(|(t, _)| **t == 1.0)
        .map(|(_, e)| *e)
        .collect();
    assert_eq!(at_one.len(), 3);
    assert!(at_one.windows(2).all(|w| w[1] < w[0]), "{at_one:?}");
}

#[test]
fn manifest_records_the_config_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let path = config("moments.toml");
    let status = bin()
        .arg("run")
        .arg(&path)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(manifest["config"], text.as_str());
    assert_eq!(
        manifest["config_sha256"],
        bernsim_cli::sha256_hex(text.as_bytes()).as_str()
    );
    for o in manifest["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(dir.path().join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"], bernsim_cli::sha256_hex(&bytes).as_str());
    }
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .env("BERNSIM_OUTPUT_DIR", dir.path())
        .arg("run")
        .arg(config("voronovskaya.toml"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir
        .path()
        .join("voronovskaya")
        .join("manifest.json")
        .exists());
}

#[test]
fn plot_writes_svg_and_rejects_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bin()
        .arg("run")
        .arg(config("semigroup-rate.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap()
        .status
        .success());
    let csv = dir.path().join("semigroup-rate.csv");
    let out = bin()
        .arg("plot")
        .arg(&csv)
        .args(["--kind", "semigroup-rate"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("semigroup-rate.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("slope -1/2"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = bin()
        .arg("plot")
        .arg(&empty)
        .args(["--kind", "voronovskaya"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["status"], "schema error");
}

#[test]
fn unknown_plot_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    std::fs::write(&csv, "n,error\n10,0.1\n").unwrap();
    let out = bin()
        .arg("plot")
        .arg(&csv)
        .args(["--kind", "pie"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!dir.path().join("x.svg").exists());
}
