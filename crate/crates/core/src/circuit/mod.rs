//! Circuit representation over the gate set `{h, cx, ccx, swap, rx, ry, rz, cp}`,
//! tokenization into the signed integer-matrix format, and parameter
//! normalization.

mod io;
mod tokens;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{parse_circuit_line, read_circuits_jsonl, write_circuits_jsonl, CircuitRecord};
pub use tokens::{detokenize, tokenize, GateSet, TokenMatrix, DEFAULT_MAX_POSITIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    H,
    Cx,
    Ccx,
    Swap,
    Rx,
    Ry,
    Rz,
    Cp,
}

impl GateKind {
    /// Declaration order; token ids follow it.
    pub const ALL: [GateKind; 8] = [
        GateKind::H,
        GateKind::Cx,
        GateKind::Ccx,
        GateKind::Swap,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::Cx => "cx",
            GateKind::Ccx => "ccx",
            GateKind::Swap => "swap",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cp => "cp",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Position in [`GateKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn arity(self) -> usize {
        self.num_controls() + self.num_targets()
    }

    pub fn num_controls(self) -> usize {
        match self {
            GateKind::Cx => 1,
            GateKind::Ccx => 2,
            _ => 0,
        }
    }

    /// Swap and cp act symmetrically on both qubits, so both are targets.
    pub fn num_targets(self) -> usize {
        match self {
            GateKind::Swap | GateKind::Cp => 2,
            _ => 1,
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cp)
    }

    /// Period of the gate's unitary in its angle: 4π for the rotations, 2π for cp.
    pub fn param_period(self) -> Option<f64> {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => Some(4.0 * PI),
            GateKind::Cp => Some(2.0 * PI),
            _ => None,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps an angle to `λ = (θ mod P)/(P/2) − 1 ∈ [−1, 1)`. Non-parameterized
/// kinds map to 0.
pub fn normalize_param(kind: GateKind, theta: f64) -> f64 {
    match kind.param_period() {
        Some(period) => theta.rem_euclid(period) / (period / 2.0) - 1.0,
        None => 0.0,
    }
}

/// Inverse of [`normalize_param`], returning an angle in `[0, P)`.
pub fn denormalize_param(kind: GateKind, lambda: f64) -> f64 {
    match kind.param_period() {
        Some(period) => ((lambda + 1.0) * period / 2.0).rem_euclid(period),
        None => 0.0,
    }
}

/// A gate placed on concrete qubits.
///
/// Instances are kept canonical: controls sorted ascending, and the two
/// qubits of the symmetric gates (swap, cp) sorted ascending as targets.
/// Angles are wrapped into `[0, period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    kind: GateKind,
    controls: Vec<usize>,
    targets: Vec<usize>,
    theta: Option<f64>,
}

impl GateInstance {
    pub fn new(
        kind: GateKind,
        controls: Vec<usize>,
        targets: Vec<usize>,
        theta: Option<f64>,
    ) -> Result<Self> {
        let (mut controls, mut targets) = (controls, targets);
        // cp is commonly written as control/target; it is symmetric.
        if kind == GateKind::Cp && controls.len() == 1 && targets.len() == 1 {
            targets.push(controls.pop().unwrap());
        }
        if controls.len() != kind.num_controls() || targets.len() != kind.num_targets() {
            return Err(Error::InvalidGate(format!(
                "{kind} takes {} control(s) and {} target(s), got {} and {}",
                kind.num_controls(),
                kind.num_targets(),
                controls.len(),
                targets.len()
            )));
        }
        controls.sort_unstable();
        if kind.num_targets() > 1 {
            targets.sort_unstable();
        }
        let mut all: Vec<usize> = controls.iter().chain(&targets).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGate(format!("{kind} uses a qubit twice")));
        }
        let theta = match (kind.param_period(), theta) {
            (Some(p), Some(t)) if t.is_finite() => Some(t.rem_euclid(p)),
            (Some(_), Some(t)) => {
                return Err(Error::InvalidGate(format!("{kind} angle {t} is not finite")))
            }
            (Some(_), None) => return Err(Error::InvalidGate(format!("{kind} needs an angle"))),
            (None, Some(_)) => {
                return Err(Error::InvalidGate(format!("{kind} takes no angle")))
            }
            (None, None) => None,
        };
        Ok(Self {
            kind,
            controls,
            targets,
            theta,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![], vec![q], None).expect("valid h")
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cx, vec![control], vec![target], None).expect("valid cx")
    }

    pub fn ccx(c0: usize, c1: usize, target: usize) -> Self {
        Self::new(GateKind::Ccx, vec![c0, c1], vec![target], None).expect("valid ccx")
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![], vec![a, b], None).expect("valid swap")
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rx, vec![], vec![q], Some(theta)).expect("valid rx")
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Ry, vec![], vec![q], Some(theta)).expect("valid ry")
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rz, vec![], vec![q], Some(theta)).expect("valid rz")
    }

    pub fn cp(a: usize, b: usize, theta: f64) -> Self {
        Self::new(GateKind::Cp, vec![], vec![a, b], Some(theta)).expect("valid cp")
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// Normalized parameter λ (0 for discrete gates).
    pub fn lambda(&self) -> f64 {
        self.theta.map_or(0.0, |t| normalize_param(self.kind, t))
    }

    /// Controls followed by targets.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(&self.targets).copied()
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().max().unwrap_or(0)
    }

    /// Same structure, different angle (wrapped).
    pub fn with_theta(&self, theta: f64) -> Self {
        let mut g = self.clone();
        if let Some(p) = self.kind.param_period() {
            g.theta = Some(theta.rem_euclid(p));
        }
        g
    }
}

impl fmt::Display for GateInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        let qs: Vec<String> = self.qubits().map(|q| format!("q{q}")).collect();
        write!(f, "{}", qs.join(","))?;
        if let Some(t) = self.theta {
            write!(f, "; {t:.4}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<GateInstance>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidParameter("a circuit needs at least one qubit".into()));
        }
        Ok(Self {
            num_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<GateInstance>) -> Result<Self> {
        let mut c = Self::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: GateInstance) -> Result<()> {
        self.check_fits(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn insert(&mut self, index: usize, gate: GateInstance) -> Result<()> {
        self.check_fits(&gate)?;
        self.gates.insert(index, gate);
        Ok(())
    }

    pub fn remove(&mut self, index: usize) -> GateInstance {
        self.gates.remove(index)
    }

    pub fn replace(&mut self, index: usize, gate: GateInstance) -> Result<GateInstance> {
        self.check_fits(&gate)?;
        Ok(std::mem::replace(&mut self.gates[index], gate))
    }

    fn check_fits(&self, gate: &GateInstance) -> Result<()> {
        match gate.qubits().find(|&q| q >= self.num_qubits) {
            Some(qubit) => Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            }),
            None => Ok(()),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gate kinds present, as a multi-hot over [`GateKind::ALL`].
    pub fn kind_mask(&self) -> [bool; 8] {
        let mut mask = [false; 8];
        for g in &self.gates {
            mask[g.kind.index()] = true;
        }
        mask
    }

    pub fn num_parameterized(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_parameterized()).count()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[n={}]", self.num_qubits)?;
        for g in &self.gates {
            write!(f, " {g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_metadata_is_consistent() {
        for k in GateKind::ALL {
            assert_eq!(k.is_parameterized(), k.param_period().is_some());
            assert_eq!(GateKind::from_name(k.name()), Some(k));
        }
        assert_eq!(GateKind::H.arity(), 1);
        assert_eq!(GateKind::Cx.arity(), 2);
        assert_eq!(GateKind::Ccx.arity(), 3);
        assert_eq!(GateKind::Swap.arity(), 2);
        assert_eq!(GateKind::Cp.arity(), 2);
        assert_eq!(GateKind::Rz.arity(), 1);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_param(GateKind::Rx, 0.0), -1.0);
        assert_eq!(normalize_param(GateKind::Rx, 2.0 * PI), 0.0);
        assert_eq!(normalize_param(GateKind::Rz, 2.0 * PI), 0.0);
        assert!((normalize_param(GateKind::Cp, 1.5 * PI) - 0.5).abs() < 1e-15);
        assert_eq!(normalize_param(GateKind::H, 1.0), 0.0);
    }

    #[test]
    fn normalize_is_periodic_and_invertible() {
        for k in GateKind::ALL.into_iter().filter(|k| k.is_parameterized()) {
            let p = k.param_period().unwrap();
            for i in 0..50 {
                let theta = -7.0 + 0.37 * i as f64;
                let l = normalize_param(k, theta);
                assert!((-1.0..1.0).contains(&l));
                assert!((l - normalize_param(k, theta + p)).abs() < 1e-12);
                let back = denormalize_param(k, l);
                let diff = (back - theta.rem_euclid(p)).abs();
                assert!(diff < 1e-12 || (p - diff) < 1e-12, "{k} {theta}");
            }
        }
    }

    #[test]
    fn gate_validation() {
        assert!(GateInstance::new(GateKind::Cx, vec![0], vec![0], None).is_err());
        assert!(GateInstance::new(GateKind::Rx, vec![], vec![0], None).is_err());
        assert!(GateInstance::new(GateKind::H, vec![], vec![0], Some(1.0)).is_err());
        assert!(GateInstance::new(GateKind::Ccx, vec![0], vec![1], None).is_err());
        let cp = GateInstance::new(GateKind::Cp, vec![2], vec![1], Some(1.0)).unwrap();
        assert_eq!(cp.targets(), &[1, 2]);
        assert!(cp.controls().is_empty());
        let mut c = Circuit::new(2).unwrap();
        assert!(matches!(
            c.push(GateInstance::h(2)),
            Err(Error::QubitOutOfRange { qubit: 2, .. })
        ));
        assert!(Circuit::new(0).is_err());
    }
}
