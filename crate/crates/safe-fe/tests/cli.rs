//! End-to-end checks of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safe-fe"))
}

fn write_multiplicative_csv(path: &Path, n: usize, n_noise: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("x1,x2");
    for i in 0..n_noise {
        out.push_str(&format!(",n{i}"));
    }
    out.push_str(",y\n");
    for _ in 0..n {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        out.push_str(&format!("{a},{b}"));
        for _ in 0..n_noise {
            out.push_str(&format!(",{}", rng.gen_range(-1.0..1.0)));
        }
        out.push_str(&format!(",{}\n", (a * b > 0.0) as u8));
    }
    std::fs::write(path, out).unwrap();
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn fit_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 800, 3, 1);

    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = bin()
            .args(["fit", "--train"])
            .arg(&train)
            .args(["--label", "y", "--mode", "rand", "--seed", "3", "--output"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_success(&out);
        assert!(out_dir.join("psi.json").exists());
        assert!(out_dir.join("selection_report.csv").exists());
        assert!(out_dir.join("trace.txt").exists());
    }
    let a = std::fs::read(dir.path().join("a/psi.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/psi.json")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical plans");
}

#[test]
fn fit_without_label_fails_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 50, 1, 2);
    let out = bin().args(["fit", "--train"]).arg(&train).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--label"), "stderr was: {stderr}");
}

#[test]
fn transform_matches_fit_time_columns() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 1500, 2, 3);
    let fit_dir = dir.path().join("fit");
    let out = bin()
        .args(["fit", "--train"])
        .arg(&train)
        .args(["--label", "y", "--output"])
        .arg(&fit_dir)
        .output()
        .unwrap();
    assert_success(&out);

    let out = bin()
        .args(["transform", "--psi"])
        .arg(fit_dir.join("psi.json"))
        .arg("--input")
        .arg(&train)
        .args(["--label", "y", "--output"])
        .arg(dir.path().join("t"))
        .output()
        .unwrap();
    assert_success(&out);

    let read_csv = |path: &Path| -> (Vec<String>, Vec<Vec<String>>) {
        let mut reader = csv::Reader::from_path(path).unwrap();
        let header = reader
            .headers()
            .unwrap()
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect();
        (header, rows)
    };
    let (header, rows) = read_csv(&dir.path().join("t/transformed.csv"));
    let (in_header, in_rows) = read_csv(&train);

    // The product feature the pipeline finds must reproduce x1*x2 exactly.
    let col = header
        .iter()
        .position(|h| h == "mul(x1,x2)")
        .unwrap_or_else(|| panic!("plan did not keep mul(x1,x2); header: {header:?}"));
    let x1 = in_header.iter().position(|h| h == "x1").unwrap();
    let x2 = in_header.iter().position(|h| h == "x2").unwrap();
    assert_eq!(rows.len(), in_rows.len());
    for (t, i) in rows.iter().zip(&in_rows) {
        let got: f64 = t[col].parse().unwrap();
        let want = i[x1].parse::<f64>().unwrap() * i[x2].parse::<f64>().unwrap();
        assert_eq!(got.to_bits(), want.to_bits());
    }
}

#[test]
fn transform_rejects_malformed_plan() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 20, 1, 4);
    let psi = dir.path().join("psi.json");
    std::fs::write(&psi, b"{ not json").unwrap();
    let out = bin()
        .args(["transform", "--psi"])
        .arg(&psi)
        .arg("--input")
        .arg(&train)
        .arg("--output")
        .arg(dir.path().join("t"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn evaluate_prints_one_or_two_aucs() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    write_multiplicative_csv(&train, 1200, 2, 5);
    write_multiplicative_csv(&test, 400, 2, 6);

    let out = bin()
        .args(["evaluate", "--train"])
        .arg(&train)
        .arg("--test")
        .arg(&test)
        .args(["--label", "y"])
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("orig_auc="));
    assert!(!stdout.contains("transformed_auc="));

    let fit_dir = dir.path().join("fit");
    let out = bin()
        .args(["fit", "--train"])
        .arg(&train)
        .args(["--label", "y", "--output"])
        .arg(&fit_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let out = bin()
        .args(["evaluate", "--train"])
        .arg(&train)
        .arg("--test")
        .arg(&test)
        .args(["--label", "y", "--psi"])
        .arg(fit_dir.join("psi.json"))
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("transformed_auc="), "stdout: {stdout}");
    let orig: f64 = stdout
        .split("orig_auc=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let transformed: f64 = stdout
        .split("transformed_auc=")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(transformed >= orig - 0.005, "stdout: {stdout}");
}

#[test]
fn evaluate_single_class_test_fails() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 200, 1, 7);
    let test = dir.path().join("test.csv");
    std::fs::write(&test, "x1,x2,n0,y\n0.5,0.5,0.1,1\n0.2,0.3,0.4,1\n").unwrap();
    let out = bin()
        .args(["evaluate", "--train"])
        .arg(&train)
        .arg("--test")
        .arg(&test)
        .args(["--label", "y"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn stability_requires_two_runs_and_prints_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_multiplicative_csv(&train, 600, 2, 8);

    let out = bin()
        .args(["stability", "--train"])
        .arg(&train)
        .args(["--label", "y", "--runs", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = bin()
        .args(["stability", "--train"])
        .arg(&train)
        .args(["--label", "y", "--runs", "2"])
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout
        .split("stability_jsd=")
        .nth(1)
        .expect("missing stability_jsd line")
        .trim()
        .parse()
        .unwrap();
    assert!((0.0..=(2.0f64).ln() + 1e-12).contains(&value));
}
