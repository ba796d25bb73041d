use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{denormalize_param, normalize_param, Circuit, GateInstance, GateKind};
use crate::error::{Error, Result};

/// A single edit applied to a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Corruption {
    /// Remove one random gate.
    Drop,
    /// Append one random gate with random connections.
    Append,
    /// Replace one random gate with a random gate.
    Replace,
    /// `λ̃ = λ + A·N(0,1)` on every parameterized gate, wrapped back into `[−1, 1)`.
    ParamNoise(f64),
}

/// Draws a gate of a random kind (among those fitting `n` qubits) on random
/// distinct qubits with a uniform angle on its support.
pub(crate) fn random_gate<R: Rng + ?Sized>(kinds: &[GateKind], n: usize, rng: &mut R) -> Result<GateInstance> {
    let fitting: Vec<GateKind> = kinds.iter().copied().filter(|k| k.arity() <= n).collect();
    let kind = *fitting
        .choose(rng)
        .ok_or_else(|| Error::InvalidParameter(format!("no gate kind fits {n} qubits")))?;
    let mut qubits: Vec<usize> = (0..n).collect();
    let (chosen, _) = qubits.partial_shuffle(rng, kind.arity());
    let chosen = chosen.to_vec();
    let (controls, targets) = chosen.split_at(kind.num_controls());
    let theta = kind.param_period().map(|p| rng.random::<f64>() * p);
    GateInstance::new(kind, controls.to_vec(), targets.to_vec(), theta)
}

/// Applies exactly one corruption. `kinds` is the gate set random gates are drawn from.
pub fn corrupt<R: Rng + ?Sized>(
    circuit: &Circuit,
    mode: Corruption,
    kinds: &[GateKind],
    rng: &mut R,
) -> Result<Circuit> {
    let mut out = circuit.clone();
    let n = circuit.num_qubits();
    match mode {
        Corruption::Drop | Corruption::Replace if circuit.is_empty() => {
            return Err(Error::InvalidParameter(
                "drop/replace need a circuit with at least one gate".into(),
            ));
        }
        Corruption::Drop => {
            let i = rng.random_range(0..circuit.len());
            out.remove(i);
        }
        Corruption::Replace => {
            let i = rng.random_range(0..circuit.len());
            let g = random_gate(kinds, n, rng)?;
            out.replace(i, g)?;
        }
        Corruption::Append => {
            let g = random_gate(kinds, n, rng)?;
            out.push(g)?;
        }
        Corruption::ParamNoise(amp) => {
            if !(amp.is_finite() && amp >= 0.0) {
                return Err(Error::InvalidParameter(format!("noise amplitude {amp}")));
            }
            let gates: Vec<GateInstance> = circuit
                .gates()
                .iter()
                .map(|g| match g.theta() {
                    Some(theta) => {
                        let noise: f64 = rng.sample(StandardNormal);
                        let lam = normalize_param(g.kind(), theta) + amp * noise;
                        let wrapped = (lam + 1.0).rem_euclid(2.0) - 1.0;
                        g.with_theta(denormalize_param(g.kind(), wrapped))
                    }
                    None => g.clone(),
                })
                .collect();
            out = Circuit::from_gates(n, gates)?;
        }
    }
    Ok(out)
}
