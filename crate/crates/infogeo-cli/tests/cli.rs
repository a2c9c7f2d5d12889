//! End-to-end runs of the batch front end: output determinism, manifest
//! round-trips, report contents, and exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infogeo"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("reading {}/{name}: {e}", dir.display()))
}

#[test]
fn geometry_report_carries_expected_scalar() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("geom");
    let status = bin()
        .args([
            "geometry",
            "--model",
            "gaussian-product",
            "--l",
            "1",
            "--point",
            "0,1,0,1,0,1",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    let scalar = report["scalar"].as_f64().unwrap();
    assert!((scalar + 3.0).abs() < 1e-4, "scalar {scalar}");
    assert!(report["weyl_max_abs"].as_f64().unwrap() > 0.01);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn ige_integrable_classifies_regular() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ige");
    let status = bin()
        .args([
            "ige",
            "--model",
            "integrable",
            "--mu-a",
            "1",
            "--mu-b",
            "1",
            "--tau-max",
            "50",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["classification"], "Regular");
    assert_eq!(report["model"], "logarithmic");
    let coefficient = report["coefficient"].as_f64().unwrap();
    assert!((coefficient - 2.0).abs() < 0.2, "coefficient {coefficient}");
    let trace = read(&out, "trace.csv");
    assert!(trace.starts_with("tau,delta_v,avg_v,ige\n"));
    assert_eq!(trace.lines().count(), 513);
}

#[test]
fn ige_chaotic_classifies_chaotic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ige-chaotic");
    let status = bin()
        .args([
            "ige",
            "--model",
            "chaotic",
            "--rate",
            "0.5",
            "--tau-max",
            "40",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["classification"], "Chaotic");
    let slope = report["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn outputs_are_byte_identical_across_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let status = bin()
            .args([
                "geodesic",
                "--model",
                "gaussian-product",
                "--l",
                "1",
                "--xi",
                "2.0",
                "--rate",
                "0.5",
                "--tau-max",
                "5",
                "--seed",
                "7",
                "--out-dir",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["manifest.json", "report.json", "trajectory.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
}

#[test]
fn manifest_round_trip_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    let status = bin()
        .args([
            "ige",
            "--model",
            "integrable",
            "--mu-a",
            "1.3",
            "--mu-b",
            "0.8",
            "--rates",
            "0.4,0.3",
            "--tau-max",
            "30",
            "--out-dir",
        ])
        .arg(&first)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest = first.join("manifest.json");
    let status = bin()
        .args(["ige", "--config"])
        .arg(&manifest)
        .args(["--out-dir"])
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["manifest.json", "report.json", "trace.csv"] {
        assert_eq!(read(&first, name), read(&second, name), "{name} differs");
    }
}

#[test]
fn spectrum_presets_separate_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    // n = 8 keeps this test quick; the n = 10 bands live in the library's
    // acceptance suite.
    let reg = tmp.path().join("reg");
    let cha = tmp.path().join("cha");
    for (preset, out) in [("regular", &reg), ("chaotic", &cha)] {
        let status = bin()
            .args(["spectrum", "--preset", preset, "--n", "8", "--out-dir"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let reg_report: serde_json::Value = serde_json::from_str(&read(&reg, "report.json")).unwrap();
    let cha_report: serde_json::Value = serde_json::from_str(&read(&cha, "report.json")).unwrap();
    assert!(
        reg_report["beta"].as_f64().unwrap() < cha_report["beta"].as_f64().unwrap(),
        "regular {} vs chaotic {}",
        reg_report["beta"],
        cha_report["beta"]
    );
    assert!(reg.join("spectrum.csv").exists());
    assert!(reg.join("spacings.csv").exists());
}

#[test]
fn spectrum_both_sectors_with_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("both");
    // n = 9 keeps both parity sectors above the spacing-count floor.
    let status = bin()
        .args([
            "spectrum",
            "--preset",
            "chaotic",
            "--n",
            "9",
            "--sector",
            "both",
            "--threads",
            "2",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["even"]["sector"], "even");
    assert_eq!(report["odd"]["sector"], "odd");
    assert!(out.join("spectrum_even.csv").exists());
    assert!(out.join("spectrum_odd.csv").exists());
}

#[test]
fn jacobi_estimates_configured_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("jacobi");
    let status = bin()
        .args([
            "jacobi",
            "--l",
            "1",
            "--xi",
            "2.0",
            "--rate",
            "0.5",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    let lambda_j = report["lambda_j"].as_f64().unwrap();
    assert!((lambda_j - 0.5).abs() < 0.025, "lambda_j {lambda_j}");
    let csv = read(&out, "trajectory.csv");
    assert!(csv.starts_with("tau,"));
    assert!(csv.lines().next().unwrap().ends_with(",j_norm"));
}

#[test]
fn invalid_configuration_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    // Unknown model name.
    let status = bin()
        .args(["geometry", "--model", "no-such-model", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // Negative spacing parameter.
    let status = bin()
        .args([
            "ige",
            "--model",
            "exponential",
            "--theta",
            "-1",
            "--tau-max",
            "10",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // Missing required flags.
    let status = bin()
        .args(["geodesic", "--model", "exponential", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("escape");
    // A geodesic on the exponential-model metric headed straight at the
    // theta = 0 boundary with a huge inward velocity cannot finish.
    let status = bin()
        .args([
            "geodesic",
            "--model",
            "wigner-dyson",
            "--initial",
            "1.0",
            "--velocity",
            "-200.0",
            "--tau-max",
            "10",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
