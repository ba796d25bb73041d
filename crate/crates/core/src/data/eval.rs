use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind};
use crate::diffusion::{decode_sample, sample, Condition, Denoiser, SampleConfig, Schedules};
use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::sim::{circuit_unitary, infidelity, Unitary};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalTarget {
    pub unitary: Unitary,
    pub kinds: Vec<GateKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Values outside `[lo, hi]` are clamped into the end bins.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let mut counts = vec![0; bins];
        if bins > 0 && hi > lo {
            for &v in values.iter().filter(|v| v.is_finite()) {
                let b = ((v - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize;
                counts[b.min(bins - 1)] += 1;
            }
        }
        Self { lo, hi, counts }
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        self.lo + (i as f64 + 0.5) * w
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "center,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{}", self.bin_center(i), c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEval {
    pub infidelities: Vec<f64>,
    pub min: f64,
    /// Samples whose tokens did not decode to a circuit (scored as 1).
    pub invalid: usize,
    pub best_circuit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub targets: Vec<TargetEval>,
    /// Over every sample of every target.
    pub histogram: Histogram,
    /// Over the per-target minima.
    pub min_histogram: Histogram,
    pub config: serde_json::Value,
}

pub const HISTOGRAM_BINS: usize = 50;

impl EvalReport {
    pub fn from_targets(targets: Vec<TargetEval>, config: serde_json::Value) -> Self {
        let all: Vec<f64> = targets.iter().flat_map(|t| t.infidelities.iter().copied()).collect();
        let mins: Vec<f64> = targets.iter().map(|t| t.min).collect();
        Self {
            histogram: Histogram::new(&all, HISTOGRAM_BINS, 0.0, 1.0),
            min_histogram: Histogram::new(&mins, HISTOGRAM_BINS, 0.0, 1.0),
            targets,
            config,
        }
    }

    /// Fraction of targets whose best sample is below `threshold`.
    pub fn solved_fraction(&self, threshold: f64) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        self.targets.iter().filter(|t| t.min < threshold).count() as f64 / self.targets.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "target,sample,infidelity")?;
        for (i, t) in self.targets.iter().enumerate() {
            for (s, v) in t.infidelities.iter().enumerate() {
                writeln!(w, "{i},{s},{v}")?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mins: Vec<f64> = self.targets.iter().map(|t| t.min).collect();
        let mean = mins.iter().sum::<f64>() / mins.len().max(1) as f64;
        format!(
            "{} targets, mean best infidelity {:.4}, solved (<0.1) {:.0}%",
            mins.len(),
            mean,
            100.0 * self.solved_fraction(0.1)
        )
    }
}

/// Best-of-`samples` scoring of one circuit list against a target.
pub fn score_circuits(target: &Unitary, circuits: &[Option<Circuit>]) -> Result<TargetEval> {
    let mut infidelities = Vec::with_capacity(circuits.len());
    let mut invalid = 0;
    let mut best: Option<(f64, &Circuit)> = None;
    for c in circuits {
        let v = match c {
            Some(c) if c.num_qubits() == target.num_qubits() => infidelity(&circuit_unitary(c), target)?,
            _ => {
                invalid += 1;
                1.0
            }
        };
        if let Some(c) = c {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, c));
            }
        }
        infidelities.push(v);
    }
    let min = infidelities.iter().copied().fold(1.0, f64::min);
    Ok(TargetEval {
        infidelities,
        min,
        invalid,
        best_circuit: best.map(|(_, c)| c.to_string()),
    })
}

/// Samples `samples` circuits per target and scores them. Target `i` uses
/// chain seeds derived from `seed + i`.
pub fn evaluate(
    den: &dyn Denoiser,
    space: &EmbeddingSpace,
    schedules: &Schedules,
    targets: &[EvalTarget],
    samples: usize,
    cfg: &SampleConfig,
    seed: u64,
) -> Result<Vec<TargetEval>> {
    let geo = den.geometry();
    if geo.d_h != space.d_h() || geo.d_w != space.d_w() {
        return Err(Error::DimensionMismatch("denoiser and embedding widths differ".into()));
    }
    let mut out = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        if t.unitary.num_qubits() != geo.num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "target {i} has {} qubits, model expects {}",
                t.unitary.num_qubits(),
                geo.num_qubits
            )));
        }
        let cond = Condition::new(&t.unitary, &t.kinds);
        let conds = vec![cond; samples];
        let outs = sample(den, schedules, cfg, &conds, None, seed.wrapping_add(i as u64))?;
        let circuits: Vec<Option<Circuit>> = outs.iter().map(|o| decode_sample(space, &o.latent).ok()).collect();
        out.push(score_circuits(&t.unitary, &circuits)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateInstance;

    #[test]
    fn single_sample_min_is_the_value() {
        let target = circuit_unitary(&Circuit::from_gates(1, vec![GateInstance::h(0)]).unwrap());
        let c = Circuit::from_gates(1, vec![GateInstance::rz(0, 1.0)]).unwrap();
        let e = score_circuits(&target, &[Some(c)]).unwrap();
        assert_eq!(e.min, e.infidelities[0]);
        let e = score_circuits(&target, &[None]).unwrap();
        assert_eq!((e.min, e.invalid), (1.0, 1));
    }

    #[test]
    fn histogram_clamps() {
        let h = Histogram::new(&[-0.1, 0.0, 0.5, 1.0, 2.0, f64::NAN], 4, 0.0, 1.0);
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
    }
}
