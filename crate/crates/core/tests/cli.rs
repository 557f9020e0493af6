use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const SMALL: &str = "cache_n = 3000\n\n[spec]\ntheta0 = 0.5\ntheta1 = 2.0\nlevel = 10\nkeep_count = 2\nbase = 3\n";

fn lab(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("lab.toml");
    if !cfg.exists() {
        std::fs::write(&cfg, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_cantor-lab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join("out").join(format!("{}.json", name))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(lab(d.path(), &["exponents"]).status.code(), Some(0));
    assert_eq!(lab(d.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(lab(d.path(), &["--level", "0", "exponents"]).status.code(), Some(2));
    assert_eq!(lab(d.path(), &["--theta0", "3.0", "--theta1", "1.0", "exponents"]).status.code(), Some(2));
    assert_eq!(lab(d.path(), &["exponents", "--d", "1.5"]).status.code(), Some(2));
}

#[test]
fn reports_carry_hash_and_checksum() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(d.path(), &["atlas", "--M", "40", "--record-h", "3", "--void-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(d.path(), "atlas");
    let cache = std::fs::read(d.path().join("out").join("coefficients.csv")).unwrap();
    let sum = format!("{:x}", Sha256::digest(&cache));
    assert_eq!(rep["cache_checksum"].as_str().unwrap(), sum);
    let hash = rep["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(rep["result"]["void_hits"].as_array().unwrap().len(), 0);

    let csv = std::fs::read_to_string(d.path().join("out").join("atlas.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_hash={} cache_checksum={}", hash, sum));
    assert_eq!(lines.next().unwrap(), "m1,m2,m3,m4,h,p,alpha_star_num,alpha_star_den");
    assert!(lines.next().is_some());
}

#[test]
fn flags_override_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    std::fs::write(b.path().join("lab.toml"), SMALL.replace("theta1 = 2.0", "theta1 = 2.6")).unwrap();
    assert_eq!(lab(a.path(), &["exponents"]).status.code(), Some(0));
    assert_eq!(lab(b.path(), &["--theta1", "2.0", "exponents"]).status.code(), Some(0));
    assert_eq!(report(a.path(), "exponents")["config_hash"], report(b.path(), "exponents")["config_hash"]);

    let c = tempfile::tempdir().unwrap();
    std::fs::write(c.path().join("lab.toml"), SMALL.replace("theta1 = 2.0", "theta1 = 2.6")).unwrap();
    assert_eq!(lab(c.path(), &["exponents"]).status.code(), Some(0));
    assert_ne!(report(a.path(), "exponents")["config_hash"], report(c.path(), "exponents")["config_hash"]);
}

#[test]
fn stale_cache_is_rebuilt() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(lab(d.path(), &["coeffs"]).status.code(), Some(0));
    let first = report(d.path(), "coeffs")["cache_checksum"].clone();
    assert_eq!(lab(d.path(), &["--theta1", "2.2", "coeffs"]).status.code(), Some(0));
    let second = report(d.path(), "coeffs")["cache_checksum"].clone();
    assert_ne!(first, second);
    let text = std::fs::read_to_string(d.path().join("out").join("coefficients.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("0,1"), "{}", row);
}

#[test]
fn bit_identical_reruns() {
    let run = || {
        let d = tempfile::tempdir().unwrap();
        for args in [
            &["constants", "--N", "2000"][..],
            &["atlas", "--M", "50", "--record-h", "2"][..],
            &["eval", "--t", "100", "--t-max", "104", "--method", "afe"][..],
        ] {
            let o = lab(d.path(), args);
            assert_eq!(o.status.code(), Some(0), "{:?}: {}", args, String::from_utf8_lossy(&o.stderr));
        }
        let mut files: Vec<_> = std::fs::read_dir(d.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files.into_iter().map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap())).collect::<Vec<_>>()
    };
    let (x, y) = (run(), run());
    assert!(x.len() >= 5);
    assert!(x == y);
}
