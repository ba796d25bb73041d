//! Entry points shared by the fuzz targets and the corpus replay test.
//!
//! Each function feeds arbitrary bytes to one parser. Rejection is fine;
//! anything accepted must survive a write/read round trip unchanged.

use crate::circuit::{detokenize, read_circuits_jsonl, write_circuits_jsonl, GateSet, TokenMatrix};
use crate::data::{Config, Dataset};
use crate::denoiser::{read_checkpoint, write_checkpoint};
use crate::schedule::NoiseSchedule;
use crate::sim::Unitary;

pub fn circuit_jsonl(data: &[u8]) {
    let Ok(circuits) = read_circuits_jsonl(data) else { return };
    let mut out = Vec::new();
    write_circuits_jsonl(&mut out, &circuits).expect("writing to memory");
    assert_eq!(read_circuits_jsonl(&out[..]).expect("reparse"), circuits);
}

/// The first two bytes pick the shape: `n = 1 + b0 % 6`, `t = 1 + b1 % 32`.
pub fn token_matrix(data: &[u8]) {
    let [b0, b1, rest @ ..] = data else { return };
    let (n, t) = (1 + *b0 as usize % 6, 1 + *b1 as usize % 32);
    let Ok(m) = TokenMatrix::from_bytes(rest, n, t) else { return };
    assert_eq!(m.to_bytes(), rest);
    let _ = detokenize(&m, &GateSet::full());
}

pub fn unitary(data: &[u8]) {
    let Ok(u) = Unitary::from_bytes(data) else { return };
    assert_eq!(u.to_bytes(), data);
}

pub fn schedule_csv(data: &[u8]) {
    let Ok(s) = NoiseSchedule::read_csv(data) else { return };
    let mut out = Vec::new();
    s.write_csv(&mut out).expect("writing to memory");
    assert_eq!(NoiseSchedule::read_csv(&out[..]).expect("reparse"), s);
}

pub fn dataset(data: &[u8]) {
    let Ok(ds) = Dataset::from_bytes(data) else { return };
    assert_eq!(ds.to_bytes(), data);
    let _ = ds.validate();
}

pub fn checkpoint(data: &[u8]) {
    let Ok(model) = read_checkpoint(data) else { return };
    assert_eq!(write_checkpoint(&model), data);
}

pub fn config(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::from_toml(text) else { return };
    assert_eq!(Config::from_toml(&cfg.to_toml()).expect("reparse"), cfg);
}

/// Target names, matching the fuzz binaries and corpus directories.
pub const TARGETS: [(&str, fn(&[u8])); 7] = [
    ("circuit_jsonl", circuit_jsonl),
    ("token_matrix", token_matrix),
    ("unitary", unitary),
    ("schedule_csv", schedule_csv),
    ("dataset", dataset),
    ("checkpoint", checkpoint),
    ("config", config),
];
