use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Circuit, GateInstance};
use crate::error::{Error, Result};
use crate::sim::{circuit_unitary, hamiltonian_evolution, HamiltonianSpec, Unitary};

pub const MAX_TARGET_QUBITS: usize = 5;
/// Entrywise agreement required between the QFT circuit and the DFT matrix.
pub const QFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    Qft { n: usize },
    Hamiltonian(HamiltonianSpec),
    FromCircuit(Circuit),
}

/// Textbook QFT: on each qubit from the most significant, a Hadamard then
/// `cp(π/2^{k−j})` from every later qubit `k`, followed by the reversing swaps.
pub fn qft_circuit(n: usize) -> Result<Circuit> {
    check_width(n)?;
    let mut c = Circuit::new(n)?;
    for j in 0..n {
        c.push(GateInstance::h(j))?;
        for k in j + 1..n {
            c.push(GateInstance::cp(k, j, PI / (1u64 << (k - j)) as f64))?;
        }
    }
    for j in 0..n / 2 {
        c.push(GateInstance::swap(j, n - 1 - j))?;
    }
    Ok(c)
}

/// `F_{xy} = ω^{xy}/√N` with `ω = e^{2πi/N}`, `N = 2^n`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |x, y| {
        let phase = 2.0 * PI * ((x * y) % dim) as f64 / dim as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// QFT unitary from its circuit, cross-checked against [`dft_matrix`].
pub fn qft_unitary(n: usize) -> Result<Unitary> {
    let u = circuit_unitary(&qft_circuit(n)?);
    let diff = (u.matrix() - dft_matrix(n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(diff <= QFT_TOL) {
        return Err(Error::NotUnitary { deviation: diff });
    }
    Ok(u)
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TARGET_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "targets support 1..={MAX_TARGET_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

pub fn make_target(kind: &TargetKind) -> Result<Unitary> {
    match kind {
        TargetKind::Qft { n } => qft_unitary(*n),
        TargetKind::Hamiltonian(spec) => {
            check_width(spec.n)?;
            hamiltonian_evolution(spec)
        }
        TargetKind::FromCircuit(c) => {
            check_width(c.num_qubits())?;
            Ok(circuit_unitary(c))
        }
    }
}
