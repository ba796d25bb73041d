use std::collections::BTreeMap;

use super::{denormalize_param, Circuit, GateInstance, GateKind};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_POSITIONS: usize = 16;

/// The token vocabulary for a subset of gate kinds.
///
/// Token `0` is the empty token, kinds get `1..=k` in declaration order and
/// the padding token is `k + 1`. Control connections are stored as the
/// negated token. Embedding classes enumerate the signed connection tokens:
/// empty, then for each kind its control role (if any) and target role, then
/// padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSet {
    kinds: Vec<GateKind>,
    classes: Vec<i16>,
}

impl GateSet {
    pub fn new(kinds: &[GateKind]) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::InvalidParameter("gate set is empty".into()));
        }
        let mut seen = [false; 8];
        let mut ordered = Vec::new();
        for &k in kinds {
            if !std::mem::replace(&mut seen[k.index()], true) {
                ordered.push(k);
            }
        }
        // Declaration order keeps ids stable regardless of how the caller lists kinds.
        ordered.sort();
        let mut classes = vec![0i16];
        for (i, k) in ordered.iter().enumerate() {
            let tok = i as i16 + 1;
            if k.num_controls() > 0 {
                classes.push(-tok);
            }
            classes.push(tok);
        }
        classes.push(ordered.len() as i16 + 1);
        Ok(Self {
            kinds: ordered,
            classes,
        })
    }

    /// All eight kinds: twelve connection classes.
    pub fn full() -> Self {
        Self::new(&GateKind::ALL).expect("non-empty")
    }

    pub fn kinds(&self) -> &[GateKind] {
        &self.kinds
    }

    pub fn contains(&self, kind: GateKind) -> bool {
        self.kinds.contains(&kind)
    }

    pub const EMPTY: i16 = 0;

    pub fn padding(&self) -> i16 {
        self.kinds.len() as i16 + 1
    }

    pub fn token_of(&self, kind: GateKind) -> Option<i16> {
        self.kinds
            .iter()
            .position(|&k| k == kind)
            .map(|i| i as i16 + 1)
    }

    pub fn kind_of(&self, token: i16) -> Option<GateKind> {
        let t = token.unsigned_abs() as usize;
        (1..=self.kinds.len()).contains(&t).then(|| self.kinds[t - 1])
    }

    /// Number of embedding classes `N`.
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, token: i16) -> Option<usize> {
        self.classes.iter().position(|&c| c == token)
    }

    pub fn token_of_class(&self, class: usize) -> Option<i16> {
        self.classes.get(class).copied()
    }

    /// Signed tokens in class order.
    pub fn classes(&self) -> &[i16] {
        &self.classes
    }
}

/// `n × t` signed token matrix plus one normalized parameter per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    num_qubits: usize,
    positions: usize,
    tokens: Vec<i16>,
    params: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(num_qubits: usize, positions: usize, tokens: Vec<i16>, params: Vec<f64>) -> Result<Self> {
        if num_qubits == 0 || positions == 0 {
            return Err(Error::DimensionMismatch("token matrix needs n ≥ 1 and t ≥ 1".into()));
        }
        if tokens.len() != num_qubits * positions || params.len() != positions {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} tokens and {} params, got {} and {}",
                num_qubits,
                positions,
                positions,
                tokens.len(),
                params.len()
            )));
        }
        Ok(Self {
            num_qubits,
            positions,
            tokens,
            params,
        })
    }

    /// A matrix holding only padding.
    pub fn padded(num_qubits: usize, positions: usize, gate_set: &GateSet) -> Self {
        Self {
            num_qubits,
            positions,
            tokens: vec![gate_set.padding(); num_qubits * positions],
            params: vec![0.0; positions],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn token(&self, qubit: usize, column: usize) -> i16 {
        self.tokens[qubit * self.positions + column]
    }

    pub fn set_token(&mut self, qubit: usize, column: usize, token: i16) {
        self.tokens[qubit * self.positions + column] = token;
    }

    /// Row-major tokens.
    pub fn tokens(&self) -> &[i16] {
        &self.tokens
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = i16> + '_ {
        (0..self.num_qubits).map(move |q| self.token(q, column))
    }

    /// Same tokens with all parameters zeroed: the ansatz of the circuit.
    pub fn structure(&self) -> TokenMatrix {
        TokenMatrix {
            params: vec![0.0; self.positions],
            ..self.clone()
        }
    }

    /// Little-endian `i16` row-major `n×t` block followed by `t` `f64` values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.tokens.len() * 2 + self.params.len() * 8);
        for &t in &self.tokens {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for &p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn byte_len(num_qubits: usize, positions: usize) -> usize {
        num_qubits * positions * 2 + positions * 8
    }

    pub fn from_bytes(bytes: &[u8], num_qubits: usize, positions: usize) -> Result<Self> {
        if num_qubits == 0 || positions == 0 {
            return Err(Error::format("token matrix needs n ≥ 1 and t ≥ 1"));
        }
        let need = Self::byte_len(num_qubits, positions);
        if bytes.len() != need {
            return Err(Error::format(format!(
                "token matrix block is {} bytes, expected {need}",
                bytes.len()
            )));
        }
        let split = num_qubits * positions * 2;
        let tokens = bytes[..split]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        let params: Vec<f64> = bytes[split..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::format("non-finite parameter in token matrix"));
        }
        Self::new(num_qubits, positions, tokens, params)
    }
}

/// One column per gate in circuit order; remaining columns padded.
pub fn tokenize(circuit: &Circuit, max_positions: usize, gate_set: &GateSet) -> Result<TokenMatrix> {
    if circuit.len() > max_positions {
        return Err(Error::TooManyGates {
            gates: circuit.len(),
            max: max_positions,
        });
    }
    let n = circuit.num_qubits();
    let mut m = TokenMatrix::padded(n, max_positions.max(1), gate_set);
    for (col, gate) in circuit.gates().iter().enumerate() {
        let tok = gate_set
            .token_of(gate.kind())
            .ok_or_else(|| Error::GateNotInSet {
                kind: gate.kind().to_string(),
            })?;
        for q in 0..n {
            m.set_token(q, col, GateSet::EMPTY);
        }
        for &c in gate.controls() {
            m.set_token(c, col, -tok);
        }
        for &t in gate.targets() {
            m.set_token(t, col, tok);
        }
        m.params[col] = gate.lambda();
    }
    Ok(m)
}

/// Inverse of [`tokenize`]. Columns holding only empty or padding tokens
/// decode to no gate.
pub fn detokenize(m: &TokenMatrix, gate_set: &GateSet) -> Result<Circuit> {
    let mut circuit = Circuit::new(m.num_qubits())?;
    let padding = gate_set.padding();
    for col in 0..m.positions() {
        let mut controls = Vec::new();
        let mut targets = Vec::new();
        let mut kinds = BTreeMap::new();
        let mut saw_padding = false;
        for (q, tok) in m.column(col).enumerate() {
            if tok == GateSet::EMPTY {
                continue;
            }
            if tok == padding {
                saw_padding = true;
                continue;
            }
            let kind = gate_set.kind_of(tok).ok_or_else(|| Error::InvalidColumn {
                column: col,
                reason: format!("unknown token {tok}"),
            })?;
            *kinds.entry(kind).or_insert(0usize) += 1;
            if tok < 0 {
                controls.push(q);
            } else {
                targets.push(q);
            }
        }
        if kinds.is_empty() {
            continue;
        }
        if saw_padding {
            return Err(Error::InvalidColumn {
                column: col,
                reason: "gate tokens mixed with padding".into(),
            });
        }
        if kinds.len() > 1 {
            return Err(Error::InvalidColumn {
                column: col,
                reason: "tokens of several gate kinds".into(),
            });
        }
        let kind = *kinds.keys().next().unwrap();
        if controls.len() != kind.num_controls() || targets.len() != kind.num_targets() {
            return Err(Error::InvalidColumn {
                column: col,
                reason: format!(
                    "{kind} needs {} control and {} target connections, found {} and {}",
                    kind.num_controls(),
                    kind.num_targets(),
                    controls.len(),
                    targets.len()
                ),
            });
        }
        let theta = kind
            .is_parameterized()
            .then(|| denormalize_param(kind, m.params()[col]));
        let gate = GateInstance::new(kind, controls, targets, theta).map_err(|e| Error::InvalidColumn {
            column: col,
            reason: e.to_string(),
        })?;
        circuit.push(gate)?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_gate_set_has_twelve_classes() {
        let gs = GateSet::full();
        assert_eq!(gs.num_classes(), 12);
        assert_eq!(gs.padding(), 9);
        assert_eq!(gs.classes(), &[0, 1, -2, 2, -3, 3, 4, 5, 6, 7, 8, 9]);
        // declaration order independent of caller order
        let a = GateSet::new(&[GateKind::Rx, GateKind::H, GateKind::Cx]).unwrap();
        let b = GateSet::new(&[GateKind::Cx, GateKind::Rx, GateKind::H]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_classes(), 6);
    }

    #[test]
    fn single_h_column_then_padding() {
        let gs = GateSet::full();
        let c = Circuit::from_gates(1, vec![GateInstance::h(0)]).unwrap();
        let m = tokenize(&c, 2, &gs).unwrap();
        assert_eq!(m.token(0, 0), gs.token_of(GateKind::H).unwrap());
        assert_eq!(m.token(0, 1), gs.padding());
        assert_eq!(m.params(), &[0.0, 0.0]);
    }

    #[test]
    fn cx_control_is_negative() {
        let gs = GateSet::full();
        let c = Circuit::from_gates(2, vec![GateInstance::cx(0, 1)]).unwrap();
        let m = tokenize(&c, 1, &gs).unwrap();
        let cx = gs.token_of(GateKind::Cx).unwrap();
        assert_eq!(m.token(0, 0), -cx);
        assert_eq!(m.token(1, 0), cx);
    }

    #[test]
    fn rz_two_pi_is_lambda_zero() {
        let gs = GateSet::full();
        let c = Circuit::from_gates(1, vec![GateInstance::rz(0, 2.0 * PI)]).unwrap();
        let m = tokenize(&c, 1, &gs).unwrap();
        assert_eq!(m.params()[0], 0.0);
    }

    #[test]
    fn tokenize_errors() {
        let small = GateSet::new(&[GateKind::H]).unwrap();
        let c = Circuit::from_gates(2, vec![GateInstance::cx(0, 1)]).unwrap();
        assert!(matches!(tokenize(&c, 4, &small), Err(Error::GateNotInSet { .. })));
        let c = Circuit::from_gates(1, vec![GateInstance::h(0), GateInstance::h(0)]).unwrap();
        assert!(matches!(tokenize(&c, 1, &small), Err(Error::TooManyGates { .. })));
    }

    #[test]
    fn lone_control_token_is_invalid_column() {
        let gs = GateSet::full();
        let cx = gs.token_of(GateKind::Cx).unwrap();
        let mut m = TokenMatrix::padded(2, 3, &gs);
        m.set_token(0, 1, -cx);
        m.set_token(1, 1, 0);
        match detokenize(&m, &gs) {
            Err(Error::InvalidColumn { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected invalid column, got {other:?}"),
        }
    }

    #[test]
    fn all_padding_is_empty_circuit() {
        let gs = GateSet::full();
        let m = TokenMatrix::padded(3, 5, &gs);
        let c = detokenize(&m, &gs).unwrap();
        assert_eq!(c.num_qubits(), 3);
        assert!(c.is_empty());
    }

    #[test]
    fn binary_layout() {
        let gs = GateSet::full();
        let c = Circuit::from_gates(2, vec![GateInstance::cx(1, 0), GateInstance::rx(1, 1.0)]).unwrap();
        let m = tokenize(&c, 3, &gs).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 2 * 3 * 2 + 3 * 8);
        // row 0, column 0 holds +cx
        assert_eq!(i16::from_le_bytes([bytes[0], bytes[1]]), 2);
        // row 1, column 0 holds -cx
        assert_eq!(i16::from_le_bytes([bytes[6], bytes[7]]), -2);
        let back = TokenMatrix::from_bytes(&bytes, 2, 3).unwrap();
        assert_eq!(back, m);
        assert!(TokenMatrix::from_bytes(&bytes[1..], 2, 3).is_err());
    }
}
