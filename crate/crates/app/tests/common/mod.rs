#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn symnet(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_symnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    out
}

pub fn ok(args: &[&str]) -> String {
    let out = symnet(args);
    assert!(
        out.status.success(),
        "symnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Paths of a small generated-and-fitted run.
pub struct Run {
    pub dir: PathBuf,
    pub network: PathBuf,
    pub calibrator: PathBuf,
}

/// generate -> fit -> predict -> calibrate in `dir`.
pub fn pipeline(dir: &Path, n: usize, seed: u64) -> Run {
    let n = n.to_string();
    let seed = seed.to_string();
    let manifest = dir.join("manifest.json");
    ok(&["generate", "--out-dir", s(dir), "--n", &n, "--seed", &seed]);
    let network = dir.join("network.json");
    ok(&[
        "fit",
        "--data",
        s(&dir.join("development.csv")),
        "--network-spec",
        s(&dir.join("network_spec.json")),
        "--ess",
        "8000",
        "--out",
        s(&network),
        "--manifest",
        s(&manifest),
    ]);
    let scores = dir.join("calibration_scores.csv");
    ok(&[
        "predict",
        "--data",
        s(&dir.join("calibration.csv")),
        "--network",
        s(&network),
        "--out",
        s(&scores),
    ]);
    let calibrator = dir.join("calibrator.json");
    ok(&[
        "calibrate",
        "--scores",
        s(&scores),
        "--labels",
        s(&dir.join("calibration.csv")),
        "--bags",
        "10",
        "--seed",
        "3",
        "--out",
        s(&calibrator),
        "--manifest",
        s(&manifest),
    ]);
    Run {
        dir: dir.to_path_buf(),
        network,
        calibrator,
    }
}
