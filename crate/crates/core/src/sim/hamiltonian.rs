use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Unitary;
use crate::error::{Error, Result};

/// Dense evolution is capped here.
pub const MAX_EVOLUTION_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianModel {
    /// `−J Σ Z_i Z_j − h Σ X_i`
    Ising,
    /// `−J Σ (X_i X_j + Y_i Y_j + Δ Z_i Z_j) − h Σ X_i`
    Xxz,
}

/// Open nearest-neighbour chain of `n` spins evolved for time `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub model: HamiltonianModel,
    pub n: usize,
    pub j: f64,
    pub h_field: f64,
    /// Anisotropy; ignored by the Ising model.
    pub delta: f64,
    pub tau: f64,
}

impl HamiltonianSpec {
    pub fn ising(n: usize, j: f64, h_field: f64, tau: f64) -> Self {
        Self {
            model: HamiltonianModel::Ising,
            n,
            j,
            h_field,
            delta: 0.0,
            tau,
        }
    }

    /// Uses the fixed transverse field `h = 0.2`.
    pub fn xxz(n: usize, j: f64, delta: f64, tau: f64) -> Self {
        Self {
            model: HamiltonianModel::Xxz,
            n,
            j,
            h_field: 0.2,
            delta,
            tau,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_EVOLUTION_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "hamiltonian evolution supports 1..={MAX_EVOLUTION_QUBITS} qubits, got {}",
                self.n
            )));
        }
        for (name, v) in [("J", self.j), ("h", self.h_field), ("delta", self.delta), ("tau", self.tau)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Pauli {
    X,
    Y,
    Z,
}

/// Kronecker product of per-qubit 2×2 factors, qubit 0 leftmost.
fn pauli_string(n: usize, ops: &[(usize, Pauli)]) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in 0..n {
        let f = match ops.iter().find(|(i, _)| *i == q).map(|(_, p)| *p) {
            None => DMatrix::identity(2, 2),
            Some(Pauli::X) => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            Some(Pauli::Y) => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            Some(Pauli::Z) => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        };
        out = out.kronecker(&f);
    }
    out
}

pub fn hamiltonian_matrix(spec: &HamiltonianSpec) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    let n = spec.n;
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let scale = |m: DMatrix<Complex64>, s: f64| m * Complex64::new(s, 0.0);
    for i in 0..n.saturating_sub(1) {
        let j = i + 1;
        match spec.model {
            HamiltonianModel::Ising => {
                h += scale(pauli_string(n, &[(i, Pauli::Z), (j, Pauli::Z)]), -spec.j);
            }
            HamiltonianModel::Xxz => {
                h += scale(pauli_string(n, &[(i, Pauli::X), (j, Pauli::X)]), -spec.j);
                h += scale(pauli_string(n, &[(i, Pauli::Y), (j, Pauli::Y)]), -spec.j);
                h += scale(pauli_string(n, &[(i, Pauli::Z), (j, Pauli::Z)]), -spec.j * spec.delta);
            }
        }
    }
    for i in 0..n {
        h += scale(pauli_string(n, &[(i, Pauli::X)]), -spec.h_field);
    }
    Ok(h)
}

/// `exp(−iτH)` through the Hermitian eigendecomposition `H = V E V†`.
pub fn hamiltonian_evolution(spec: &HamiltonianSpec) -> Result<Unitary> {
    let h = hamiltonian_matrix(spec)?;
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|e| Complex64::from_polar(1.0, -spec.tau * e)),
    );
    Unitary::new(v * phases * v.adjoint())
}
