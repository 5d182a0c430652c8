#![allow(dead_code)]

use std::path::PathBuf;

use ssvqd_core::{parse_fcidump, MolecularIntegrals};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load(name: &str) -> (MolecularIntegrals, serde_json::Value) {
    let dir = fixture_dir();
    let text = std::fs::read_to_string(dir.join(format!("{name}.FCIDUMP"))).unwrap();
    let meta = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    (parse_fcidump(&text).unwrap(), serde_json::from_str(&meta).unwrap())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
