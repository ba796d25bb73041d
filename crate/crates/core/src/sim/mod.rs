//! Exact dense unitary semantics for circuits.
//!
//! Qubit `q` of an `n`-qubit register is bit `n − 1 − q` of the basis index,
//! so qubit 0 is the most significant (leftmost) tensor factor. Rotations
//! follow `R_a(θ) = exp(−iθA/2)`; `cp(θ)` puts `e^{iθ}` on `|11⟩`.

mod corrupt;
mod hamiltonian;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Circuit, GateInstance, GateKind};
use crate::error::{Error, Result};

pub use corrupt::{corrupt, Corruption};
pub(crate) use corrupt::random_gate;
pub use hamiltonian::{hamiltonian_evolution, hamiltonian_matrix, HamiltonianModel, HamiltonianSpec};

pub const UNITARITY_TOL: f64 = 1e-10;

/// Largest register the dense routines accept.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    num_qubits: usize,
    matrix: DMatrix<Complex64>,
}

/// `‖M M† − I‖_max`.
pub fn unitarity_error(m: &DMatrix<Complex64>) -> f64 {
    let prod = m * m.adjoint();
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}

impl Unitary {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square with power-of-two size ≥ 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = unitarity_error(&matrix);
        if !(deviation <= UNITARITY_TOL) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            num_qubits,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// `self · other` (other applied first).
    pub fn compose(&self, other: &Unitary) -> Result<Unitary> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("compose of unequal sizes".into()));
        }
        Unitary::new(&self.matrix * &other.matrix)
    }

    /// Row-major interleaved `(re, im)` entries, `2·4^n` reals.
    pub fn features(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(2 * d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.matrix[(i, j)];
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    /// `u32` little-endian dimension header, then row-major little-endian
    /// `f64` pairs `(re, im)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(4 + 16 * d * d);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        for x in self.features() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Parses one unitary from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn from_bytes_prefix(bytes: &[u8]) -> Result<(Unitary, usize)> {
        if bytes.len() < 4 {
            return Err(Error::format("unitary header truncated"));
        }
        let d = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        if d < 2 || !d.is_power_of_two() || d > (1 << MAX_QUBITS) {
            return Err(Error::format(format!("bad unitary dimension {d}")));
        }
        let need = 4 + 16 * d * d;
        if bytes.len() < need {
            return Err(Error::format(format!(
                "unitary body truncated: {} of {need} bytes",
                bytes.len()
            )));
        }
        let mut vals = bytes[4..need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re = vals.next().unwrap();
                let im = vals.next().unwrap();
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        Ok((Unitary::new(m)?, need))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Unitary> {
        let (u, used) = Self::from_bytes_prefix(bytes)?;
        if used != bytes.len() {
            return Err(Error::format("trailing bytes after unitary"));
        }
        Ok(u)
    }
}

fn single_qubit_matrix(kind: GateKind, theta: f64) -> [[Complex64; 2]; 2] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
        }
        GateKind::Rx => [[c(ch, 0.0), c(0.0, -sh)], [c(0.0, -sh), c(ch, 0.0)]],
        GateKind::Ry => [[c(ch, 0.0), c(-sh, 0.0)], [c(sh, 0.0), c(ch, 0.0)]],
        GateKind::Rz => [[c(ch, -sh), c(0.0, 0.0)], [c(0.0, 0.0), c(ch, sh)]],
        // X, used as the target action of cx/ccx
        _ => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
    }
}

#[inline]
fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Applies `gate` to a statevector of `n` qubits in place.
pub fn apply_gate(state: &mut [Complex64], gate: &GateInstance, n: usize) {
    debug_assert_eq!(state.len(), 1 << n);
    let theta = gate.theta().unwrap_or(0.0);
    match gate.kind() {
        GateKind::Swap => {
            let (a, b) = (bit(n, gate.targets()[0]), bit(n, gate.targets()[1]));
            for i in 0..state.len() {
                if i & a != 0 && i & b == 0 {
                    state.swap(i, i ^ a ^ b);
                }
            }
        }
        GateKind::Cp => {
            let mask = bit(n, gate.targets()[0]) | bit(n, gate.targets()[1]);
            let phase = Complex64::from_polar(1.0, theta);
            for (i, amp) in state.iter_mut().enumerate() {
                if i & mask == mask {
                    *amp *= phase;
                }
            }
        }
        kind => {
            let m = single_qubit_matrix(kind, theta);
            let t = bit(n, gate.targets()[0]);
            let cmask = gate.controls().iter().fold(0, |acc, &q| acc | bit(n, q));
            for i in 0..state.len() {
                if i & t != 0 || i & cmask != cmask {
                    continue;
                }
                let j = i | t;
                let (a0, a1) = (state[i], state[j]);
                state[i] = m[0][0] * a0 + m[0][1] * a1;
                state[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}

fn apply_to_columns(matrix: &mut DMatrix<Complex64>, gate: &GateInstance, n: usize) {
    let dim = matrix.nrows();
    for col in matrix.as_mut_slice().chunks_exact_mut(dim) {
        apply_gate(col, gate, n);
    }
}

/// Full `2^n × 2^n` matrix of a single gate.
pub fn gate_unitary(gate: &GateInstance, n: usize) -> Result<Unitary> {
    if let Some(q) = gate.qubits().find(|&q| q >= n) {
        return Err(Error::QubitOutOfRange {
            qubit: q,
            num_qubits: n,
        });
    }
    if n > MAX_QUBITS {
        return Err(Error::InvalidParameter(format!("{n} qubits exceed the dense limit")));
    }
    let mut u = Unitary::identity(n);
    apply_to_columns(&mut u.matrix, gate, n);
    Ok(u)
}

/// Ordered product of the gate unitaries; gate 0 acts first.
pub fn circuit_unitary(circuit: &Circuit) -> Unitary {
    let n = circuit.num_qubits();
    assert!(n <= MAX_QUBITS, "{n} qubits exceed the dense limit");
    let mut u = Unitary::identity(n);
    for g in circuit.gates() {
        apply_to_columns(&mut u.matrix, g, n);
    }
    u
}

/// `1 − |Tr(U† U_C)|² / 4^n`, clamped to `[0, 1]`.
pub fn infidelity(u: &Unitary, target: &Unitary) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "infidelity between {}x{} and {}x{}",
            u.dim(),
            u.dim(),
            target.dim(),
            target.dim()
        )));
    }
    let (a, b) = (u.matrix(), target.matrix());
    // Tr(A† B) = Σ conj(a_ij) b_ij
    let tr: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let d = u.dim() as f64;
    Ok((1.0 - tr.norm_sqr() / (d * d)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rz_zero_is_identity() {
        let u = gate_unitary(&GateInstance::rz(0, 0.0), 1).unwrap();
        assert!((u.matrix() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn hadamard_matrix() {
        let u = gate_unitary(&GateInstance::h(0), 1).unwrap();
        let s = FRAC_1_SQRT_2;
        let expect = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        assert!((u.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn cx_is_involution() {
        let c2 = Circuit::from_gates(2, vec![GateInstance::cx(0, 1), GateInstance::cx(0, 1)]).unwrap();
        let u = circuit_unitary(&c2);
        assert!((u.matrix() - DMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn cx_flips_target_when_control_set() {
        // control q0 (msb), |10> -> |11>
        let u = gate_unitary(&GateInstance::cx(0, 1), 2).unwrap();
        assert_eq!(u.matrix()[(3, 2)], c(1.0, 0.0));
        assert_eq!(u.matrix()[(2, 3)], c(1.0, 0.0));
        assert_eq!(u.matrix()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_unitary(&Circuit::new(2).unwrap());
        assert_eq!(u, Unitary::identity(2));
    }

    #[test]
    fn rz_half_pi_diagonal() {
        let circ = Circuit::from_gates(1, vec![GateInstance::rz(0, PI / 2.0)]).unwrap();
        let u = circuit_unitary(&circ);
        let e = Complex64::from_polar(1.0, -PI / 4.0);
        assert!((u.matrix()[(0, 0)] - e).norm() < 1e-15);
        assert!((u.matrix()[(1, 1)] - e.conj()).norm() < 1e-15);
        assert_eq!(u.matrix()[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn infidelity_examples() {
        let id = Unitary::identity(1);
        assert_eq!(infidelity(&id, &id).unwrap(), 0.0);
        let x = gate_unitary(&GateInstance::cx(0, 1), 2).unwrap();
        let _ = x;
        let xg = Unitary::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        assert_eq!(infidelity(&id, &xg).unwrap(), 1.0);
        let rz = gate_unitary(&GateInstance::rz(0, PI / 2.0), 1).unwrap();
        assert!((infidelity(&id, &rz).unwrap() - 0.5).abs() < 1e-15);
        assert!(infidelity(&id, &Unitary::identity(2)).is_err());
    }

    #[test]
    fn constructor_rejects_non_unitary() {
        let m = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(Unitary::new(m), Err(Error::NotUnitary { .. })));
        let m = DMatrix::from_element(3, 3, c(0.0, 0.0));
        assert!(matches!(Unitary::new(m), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn out_of_range_gate() {
        assert!(matches!(
            gate_unitary(&GateInstance::h(3), 2),
            Err(Error::QubitOutOfRange { qubit: 3, .. })
        ));
    }

    #[test]
    fn unitary_bytes_round_trip() {
        let circ = Circuit::from_gates(2, vec![GateInstance::h(0), GateInstance::cp(0, 1, 0.3)]).unwrap();
        let u = circuit_unitary(&circ);
        let bytes = u.to_bytes();
        assert_eq!(bytes.len(), 4 + 16 * 16);
        assert_eq!(&bytes[..4], &4u32.to_le_bytes());
        assert_eq!(Unitary::from_bytes(&bytes).unwrap(), u);
        assert!(Unitary::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
