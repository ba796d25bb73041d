use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcdiff_core::circuit::{Circuit, GateInstance, GateKind, GateSet};
use qcdiff_core::data::{
    balanced_test_split, corruption_infidelities, evaluate, generate_records, make_target, qft_circuit,
    resample_parameters, score_circuits, Config, Dataset, DatasetRecord, EvalReport, EvalTarget, GenSpec, Histogram,
    TargetKind, RECORD_TOL,
};
use qcdiff_core::denoiser::OracleDenoiser;
use qcdiff_core::diffusion::{Geometry, SampleConfig, Schedules};
use qcdiff_core::schedule::{fixed_schedule, FixedKind};
use qcdiff_core::sim::{circuit_unitary, infidelity, Corruption, HamiltonianSpec};

fn toy_set() -> GateSet {
    GateSet::new(&[GateKind::H, GateKind::Cx, GateKind::Rx]).unwrap()
}

fn spec(count: usize, k: usize) -> GenSpec {
    GenSpec { qubits: [2, 2], gates: [2, 4], kinds: toy_set().kinds().to_vec(), positions: 4, count, resample_k: k }
}

#[test]
fn generated_records_are_consistent() {
    let gs = toy_set();
    let recs = generate_records(&spec(600, 3), &gs, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(recs.len(), 600);
    for r in &recs {
        r.validate(&gs).unwrap();
        let c = r.circuit(&gs).unwrap();
        assert!((2..=4).contains(&c.len()));
        assert_eq!(c.len(), r.gate_count);
        // Stored unitary agrees with an independent simulation.
        assert!(infidelity(&circuit_unitary(&c), &r.unitary).unwrap() < RECORD_TOL);
        // The gate mask covers every kind used.
        assert!(r.kinds().iter().all(|k| gs.contains(*k)));
        assert!(c.gates().iter().all(|g| r.gate_mask[g.kind().index()]));
    }
    // Copies of one ansatz are contiguous; each ansatz appears in one run.
    let mut seen = HashSet::new();
    let mut prev: Option<Vec<u8>> = None;
    for r in &recs {
        let key = r.ansatz_key();
        if prev.as_ref() != Some(&key) {
            assert!(seen.insert(key.clone()), "ansatz repeated after a gap");
        }
        prev = Some(key);
    }
}

#[test]
fn small_space_saturates() {
    let gs = GateSet::new(&[GateKind::H]).unwrap();
    let s = GenSpec { qubits: [1, 1], gates: [1, 2], kinds: vec![GateKind::H], positions: 2, count: 50, resample_k: 2 };
    let recs = generate_records(&s, &gs, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(recs.len(), 2);
}

#[test]
fn split_is_disjoint_and_balanced() {
    let gs = toy_set();
    let recs = generate_records(&spec(3000, 0), &gs, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let (train, test) = balanced_test_split(&recs, 7, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(train.len() + test.len(), recs.len());
    let mut per_count: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &test {
        *per_count.entry(r.gate_count).or_default() += 1;
    }
    assert_eq!(per_count, BTreeMap::from([(2, 7), (3, 7), (4, 7)]));
    let test_keys: HashSet<Vec<u8>> = test.iter().map(DatasetRecord::ansatz_key).collect();
    assert_eq!(test_keys.len(), test.len());
    assert!(train.iter().all(|r| !test_keys.contains(&r.ansatz_key())));
    assert!(balanced_test_split(&recs, 100_000, &mut ChaCha8Rng::seed_from_u64(2)).is_err());
}

#[test]
fn resampling_after_the_split_never_leaks() {
    let gs = toy_set();
    let recs = generate_records(&spec(1500, 0), &gs, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let (train, test) = balanced_test_split(&recs, 5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let grown = resample_parameters(&train, 4, 4, &gs, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert!(grown.len() > train.len());
    // Audit by hashing the structure bytes of every record.
    let test_keys: HashSet<Vec<u8>> = test.iter().map(|r| r.tokens.structure().to_bytes()).collect();
    assert!(grown.iter().all(|r| !test_keys.contains(&r.tokens.structure().to_bytes())));
    // Copies keep the ansatz and change only the angles.
    for r in &grown {
        assert!(train.iter().any(|t| t.ansatz_key() == r.ansatz_key()));
    }
}

#[test]
fn dataset_file_round_trip() {
    let gs = toy_set();
    let ds = Dataset {
        seed: 9,
        config: Config::default().to_toml(),
        gate_set: gs.clone(),
        positions: 4,
        records: generate_records(&spec(30, 2), &gs, &mut ChaCha8Rng::seed_from_u64(9)).unwrap(),
    };
    let bytes = ds.to_bytes();
    let back = Dataset::from_bytes(&bytes).unwrap();
    assert_eq!(back, ds);
    back.validate().unwrap();
    assert!(Dataset::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(Dataset::from_bytes(&extra).is_err());
}

#[test]
fn oracle_evaluation_scores_zero() {
    let gs = toy_set();
    let recs = generate_records(&spec(20, 0), &gs, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let space = qcdiff_core::embed::EmbeddingSpace::build(gs, 13, 3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let schedules = Schedules {
        h: fixed_schedule(FixedKind::CosineAlpha2, 100).unwrap(),
        w: fixed_schedule(FixedKind::CosineAlpha2, 100).unwrap(),
    };
    let geo = Geometry { num_qubits: 2, positions: 4, d_h: 13, d_w: 3 };
    let cfg = SampleConfig { steps: 10, ..SampleConfig::default() };
    for r in recs.iter().take(5) {
        let lat = space.encode(&r.tokens).unwrap();
        let den = OracleDenoiser::new(geo, schedules.clone(), lat.h, lat.w);
        let target = EvalTarget { unitary: r.unitary.clone(), kinds: r.kinds() };
        let res = evaluate(&den, &space, &schedules, &[target], 3, &cfg, 0).unwrap();
        assert!(res[0].min < 1e-12);
        assert_eq!(res[0].invalid, 0);
        let report = EvalReport::from_targets(res, serde_json::json!({}));
        assert_eq!(report.solved_fraction(0.1), 1.0);
    }
}

#[test]
fn scoring_and_histograms() {
    let target = make_target(&TargetKind::Qft { n: 2 }).unwrap();
    let good = qft_circuit(2).unwrap();
    let bad = Circuit::from_gates(2, vec![GateInstance::h(0)]).unwrap();
    let e = score_circuits(&target, &[Some(bad), None, Some(good.clone())]).unwrap();
    assert!(e.min < 1e-12);
    assert_eq!(e.invalid, 1);
    assert_eq!(e.best_circuit, Some(good.to_string()));

    let h = Histogram::new(&[0.05, 0.15, 0.15, 0.95], 10, 0.0, 1.0);
    assert_eq!(h.total(), 4);
    assert_eq!(h.counts[1], 2);
    assert!((h.bin_center(0) - 0.05).abs() < 1e-12);
    let mut csv = Vec::new();
    h.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("center,count\n"));
}

#[test]
fn hamiltonian_targets_are_unitary() {
    let u = make_target(&TargetKind::Hamiltonian(HamiltonianSpec::ising(3, 1.0, 0.5, 0.3))).unwrap();
    assert_eq!(u.num_qubits(), 3);
    assert!(make_target(&TargetKind::Qft { n: 6 }).is_err());
}

#[test]
fn corruption_histogram_inputs() {
    let circuits: Vec<Circuit> = (1..=3).map(|n| qft_circuit(n).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let zero = corruption_infidelities(&circuits, Corruption::ParamNoise(0.0), &GateKind::ALL, &mut rng).unwrap();
    assert!(zero.iter().all(|&f| f < 1e-12));
    let dropped = corruption_infidelities(&circuits, Corruption::Drop, &GateKind::ALL, &mut rng).unwrap();
    assert!(dropped.iter().all(|&f| (0.0..=1.0).contains(&f)));
}

#[test]
fn pinned_toy_config_is_the_default_with_seed_one() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy.toml");
    let cfg = Config::load(&path).unwrap();
    let want = Config { seed: 1, ..Config::default() };
    assert_eq!(cfg, want);
    assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(Config::from_toml("version = 1\nunknown = 3\n").is_err());
    assert!(Config::from_toml("version = 2\n").is_err());
}
