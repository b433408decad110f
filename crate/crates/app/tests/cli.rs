mod common;

use std::fs;

use common::{ok, pipeline, s, symnet};
use symnet_core::graph::NetworkFile;

#[test]
fn fit_on_empty_csv_gives_uniform_cpds() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.csv");
    fs::write(&data, "").unwrap();
    let out = dir.path().join("network.json");
    ok(&["fit", "--data", s(&data), "--ess", "8000", "--out", s(&out)]);
    let net = NetworkFile::read(&out).unwrap().into_network().unwrap();
    assert_eq!(net.len(), 48);
    for cpd in net.cpds() {
        let u = 1.0 / cpd.cardinality() as f64;
        assert!(
            cpd.values().iter().all(|v| (v - u).abs() < 1e-12),
            "{}",
            cpd.child()
        );
    }
}

#[test]
fn full_pipeline_report_has_metric_fields() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path(), 1500, 5);
    let report = run.dir.join("report.json");
    let curves = run.dir.join("curves");
    let stdout = ok(&[
        "evaluate",
        "--data",
        s(&run.dir.join("test.csv")),
        "--network",
        s(&run.network),
        "--calibrator",
        s(&run.calibrator),
        "--threshold",
        "0.5",
        "--report",
        s(&report),
        "--curves",
        s(&curves),
        "--manifest",
        s(&run.dir.join("manifest.json")),
    ]);
    assert!(stdout.contains("Depression") && stdout.contains("auc"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for c in ["Depression", "Anxiety"] {
        let cond = &json["conditions"][c];
        assert!(cond["raw"]["roc_auc"].is_f64());
        assert!(cond["raw"]["ece"].is_f64());
        assert!(cond["calibrated"]["ece"].is_f64());
        assert!(
            cond["raw"]["prevalence"]["ppv"].is_number()
                || cond["raw"]["prevalence"]["ppv"].is_string()
        );
        assert!(cond["raw"]["fairness"]["sex"]["equalized_odds_difference"].is_number());
    }
    assert!(curves.join("Depression.calibrated.csv").exists());
    let manifest = fs::read_to_string(run.dir.join("manifest.json")).unwrap();
    for role in ["development", "network", "bins", "calibrator", "report"] {
        assert!(manifest.contains(&format!("\"{role}\"")), "{role} missing");
    }
}

#[test]
fn same_seeds_give_byte_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), 1200, 9);
    pipeline(b.path(), 1200, 9);
    for f in [
        "development.csv",
        "calibration.csv",
        "test.csv",
        "config.json",
        "network.json",
        "network.bins.json",
        "calibrator.json",
        "manifest.json",
    ] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn tampered_artifact_fails_manifest_check() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path(), 900, 2);
    let mut text = fs::read_to_string(&run.calibrator).unwrap();
    text.push(' ');
    fs::write(&run.calibrator, text).unwrap();
    let out = symnet(&[
        "query",
        "--network",
        s(&run.network),
        "--manifest",
        s(&run.dir.join("manifest.json")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrator"));
}

#[test]
fn validation_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "Depression\nmaybe\n").unwrap();
    let out = symnet(&[
        "fit",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("n.json")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("maybe"));

    let out = symnet(&[
        "fit",
        "--data",
        s(&data),
        "--ess",
        "0",
        "--out",
        s(&dir.path().join("n.json")),
    ]);
    assert!(!out.status.success());
}
