//! Regenerates the fuzz seed corpora under `fuzz/corpus/<target>/`.
//!
//! `cargo run -p qcdiff-core --example fuzz_seeds`

use std::fs;
use std::path::Path;

use qcdiff_core::circuit::{tokenize, write_circuits_jsonl, Circuit, GateInstance, GateKind, GateSet};
use qcdiff_core::data::{generate_records, qft_circuit, Config, Dataset, GenSpec};
use qcdiff_core::denoiser::{write_checkpoint, ModelConfig, ToyDenoiser};
use qcdiff_core::diffusion::Geometry;
use qcdiff_core::schedule::{fixed_schedule, FixedKind};
use qcdiff_core::sim::{circuit_unitary, Unitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn put(target: &str, name: &str, bytes: &[u8]) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(name), bytes).unwrap();
}

fn main() {
    let mixed = Circuit::from_gates(
        3,
        vec![
            GateInstance::h(0),
            GateInstance::ccx(0, 2, 1),
            GateInstance::rz(2, 0.75),
            GateInstance::swap(0, 2),
            GateInstance::cp(1, 0, 2.0),
        ],
    )
    .unwrap();

    let mut jsonl = Vec::new();
    write_circuits_jsonl(&mut jsonl, &[qft_circuit(3).unwrap(), mixed.clone()]).unwrap();
    put("circuit_jsonl", "qft3_and_mixed.jsonl", &jsonl);
    put("circuit_jsonl", "empty_circuit.jsonl", b"{\"n\":1,\"gates\":[]}\n");

    let gs = GateSet::full();
    let m = tokenize(&mixed, 6, &gs).unwrap();
    let mut tok = vec![2u8, 5u8];
    tok.extend(m.to_bytes());
    put("token_matrix", "mixed_3x6.bin", &tok);

    put("unitary", "qft2.bin", &circuit_unitary(&qft_circuit(2).unwrap()).to_bytes());
    put("unitary", "identity1.bin", &Unitary::identity(1).to_bytes());

    for (kind, steps) in [(FixedKind::CosineAlpha2, 10), (FixedKind::LinearBeta, 16)] {
        let mut csv = Vec::new();
        fixed_schedule(kind, steps).unwrap().write_csv(&mut csv).unwrap();
        put("schedule_csv", &format!("{}.csv", kind.name()), &csv);
    }

    let small = GateSet::new(&[GateKind::H, GateKind::Cx, GateKind::Rx]).unwrap();
    let spec = GenSpec {
        qubits: [2, 2],
        gates: [1, 3],
        kinds: small.kinds().to_vec(),
        positions: 3,
        count: 4,
        resample_k: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ds = Dataset {
        seed: 0,
        config: "version = 1\n".into(),
        records: generate_records(&spec, &small, &mut rng).unwrap(),
        gate_set: small,
        positions: 3,
    };
    put("dataset", "toy4.bin", &ds.to_bytes());

    let geo = Geometry {
        num_qubits: 1,
        positions: 2,
        d_h: 5,
        d_w: 3,
    };
    let cfg = ModelConfig {
        hidden: 4,
        layers: 2,
        time_freqs: 1,
    };
    put("checkpoint", "tiny.bin", &write_checkpoint(&ToyDenoiser::new(geo, cfg, &mut rng)));

    put("config", "default.toml", Config::default().to_toml().as_bytes());
    put("config", "minimal.toml", b"version = 1\n");
}
