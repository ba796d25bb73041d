//! Datasets, targets, evaluation and run configuration.

mod config;
mod dataset;
mod eval;
mod targets;

pub use config::{
    CircuitsConfig, Config, EmbeddingConfig, SamplerConfig, ScheduleConfig, TrainingConfig, CONFIG_VERSION,
};
pub use dataset::{
    balanced_test_split, generate_records, random_circuit, resample_parameters, resample_record, Dataset,
    DatasetRecord, GenSpec, DATASET_VERSION, RECORD_TOL,
};
pub use eval::{evaluate, score_circuits, EvalReport, EvalTarget, Histogram, TargetEval, HISTOGRAM_BINS};
pub use targets::{dft_matrix, make_target, qft_circuit, qft_unitary, TargetKind, MAX_TARGET_QUBITS, QFT_TOL};

use rand::Rng;

use crate::circuit::{Circuit, GateKind};
use crate::denoiser::TrainExample;
use crate::diffusion::Condition;
use crate::embed::EmbeddingSpace;
use crate::error::Result;
use crate::sim::{circuit_unitary, corrupt, infidelity, Corruption};

pub fn mask_bits(mask: &[bool; 8]) -> u8 {
    mask.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u8) << i))
}

pub fn mask_from_bits(bits: u8) -> [bool; 8] {
    std::array::from_fn(|i| bits >> i & 1 == 1)
}

pub fn kinds_of_mask(mask: &[bool; 8]) -> Vec<GateKind> {
    GateKind::ALL.iter().copied().filter(|k| mask[k.index()]).collect()
}

impl Config {
    pub fn gen_spec(&self) -> Result<GenSpec> {
        let c = &self.circuits;
        Ok(GenSpec {
            qubits: c.qubits,
            gates: c.gates,
            kinds: self.kinds()?,
            positions: c.max_positions,
            count: c.count,
            resample_k: c.resample_k,
        })
    }
}

/// Embeds each record's circuit and pairs it with its condition.
pub fn training_examples(space: &EmbeddingSpace, records: &[DatasetRecord]) -> Result<Vec<TrainExample>> {
    records
        .iter()
        .map(|r| {
            let lat = space.encode(&r.tokens)?;
            Ok(TrainExample {
                h0: lat.h,
                w0: lat.w,
                cond: Condition::new(&r.unitary, &r.kinds()),
            })
        })
        .collect()
}

/// Infidelity between each circuit and one corrupted copy of it.
/// Random replacement or appended gates are drawn from `kinds`.
pub fn corruption_infidelities<R: Rng + ?Sized>(
    circuits: &[Circuit],
    mode: Corruption,
    kinds: &[GateKind],
    rng: &mut R,
) -> Result<Vec<f64>> {
    circuits
        .iter()
        .map(|c| {
            let bad = corrupt(c, mode, kinds, rng)?;
            infidelity(&circuit_unitary(&bad), &circuit_unitary(c))
        })
        .collect()
}
