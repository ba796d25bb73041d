//! Gate-pair encoding: a BPE-style merge loop over circuit corpora.
//!
//! Two gates form a pair when they are consecutive in the stored gate order
//! and act on at least one common qubit. Pairs are keyed structurally: qubits
//! are relabeled to roles by first appearance (left constituent first) and
//! angles are ignored. Interchangeable qubits of a base gate (the controls of
//! ccx, both qubits of swap and cp) are tried in each order and the smallest
//! key wins, so a pattern does not depend on how its wires were labeled.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateInstance, GateKind};
use crate::error::{Error, Result};

/// Token ids below this are base gate kinds (by `GateKind::index`).
pub const BASE_TOKENS: u32 = GateKind::ALL.len() as u32;
pub const DEFAULT_MAX_ITERATIONS: usize = 250;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub left: u32,
    pub right: u32,
    /// Role of each qubit of the left constituent, in its own qubit order.
    pub left_roles: Vec<u8>,
    pub right_roles: Vec<u8>,
}

impl PairKey {
    pub fn arity(&self) -> usize {
        self.left_roles
            .iter()
            .chain(&self.right_roles)
            .map(|&r| r as usize + 1)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpePattern {
    pub token: u32,
    pub key: PairKey,
    pub depth: usize,
    /// Pair count at the moment the merge was chosen.
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpeVocab {
    pub merges: Vec<GpePattern>,
    pub min_frequency: usize,
    pub max_iterations: usize,
    /// Gate counts per base kind in the input corpus.
    pub base_counts: [usize; 8],
}

/// One token occurrence in a rewritten circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub token: u32,
    /// Absolute qubit for each role of the token.
    pub qubits: Vec<usize>,
    /// Angles of the parameterized primitives, in gate order.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCircuit {
    pub num_qubits: usize,
    pub units: Vec<Unit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpeOutput {
    pub vocab: GpeVocab,
    pub corpus: Vec<EncodedCircuit>,
    /// Total token count before the first merge and after each one.
    pub token_counts: Vec<usize>,
}

fn base_unit(g: &GateInstance) -> Unit {
    Unit {
        token: g.kind().index() as u32,
        qubits: g.qubits().collect(),
        params: g.theta().into_iter().collect(),
    }
}

pub fn encode_circuit(c: &Circuit) -> EncodedCircuit {
    EncodedCircuit {
        num_qubits: c.num_qubits(),
        units: c.gates().iter().map(base_unit).collect(),
    }
}

/// Orderings of a unit's qubit list that describe the same operation.
fn orderings(u: &Unit) -> Vec<Vec<usize>> {
    let mut out = vec![u.qubits.clone()];
    if u.token < BASE_TOKENS {
        let kind = GateKind::ALL[u.token as usize];
        let symmetric = matches!(kind, GateKind::Ccx | GateKind::Swap | GateKind::Cp);
        if symmetric {
            let mut alt = u.qubits.clone();
            alt.swap(0, 1);
            out.push(alt);
        }
    }
    out
}

/// Structural key of an adjacent pair, with the absolute qubit of each role.
/// `None` when the two share no qubit.
pub fn pair_key(a: &Unit, b: &Unit) -> Option<(PairKey, Vec<usize>)> {
    if !a.qubits.iter().any(|q| b.qubits.contains(q)) {
        return None;
    }
    let mut best: Option<(PairKey, Vec<usize>)> = None;
    for qa in orderings(a) {
        for qb in orderings(b) {
            let mut roles: Vec<usize> = Vec::with_capacity(qa.len() + qb.len());
            let mut role_of = |q: usize| match roles.iter().position(|&r| r == q) {
                Some(i) => i as u8,
                None => {
                    roles.push(q);
                    (roles.len() - 1) as u8
                }
            };
            let left_roles: Vec<u8> = qa.iter().map(|&q| role_of(q)).collect();
            let right_roles: Vec<u8> = qb.iter().map(|&q| role_of(q)).collect();
            let key = PairKey {
                left: a.token,
                right: b.token,
                left_roles,
                right_roles,
            };
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, roles));
            }
        }
    }
    best
}

fn count_pairs<'a>(circuits: impl Iterator<Item = &'a EncodedCircuit>) -> BTreeMap<PairKey, usize> {
    let mut counts = BTreeMap::new();
    for c in circuits {
        for w in c.units.windows(2) {
            if let Some((key, _)) = pair_key(&w[0], &w[1]) {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Counts every adjacent qubit-sharing pair in the corpus by structural key.
/// Overlapping occurrences (as in three identical gates in a row) all count.
pub fn find_pairs(corpus: &[Circuit]) -> BTreeMap<PairKey, usize> {
    let encoded: Vec<EncodedCircuit> = corpus.iter().map(encode_circuit).collect();
    count_pairs(encoded.iter())
}

fn rewrite(c: &mut EncodedCircuit, key: &PairKey, token: u32) {
    let old = std::mem::take(&mut c.units);
    let mut it = old.into_iter().peekable();
    while let Some(a) = it.next() {
        let merged = it
            .peek()
            .and_then(|b| pair_key(&a, b))
            .filter(|(k, _)| k == key);
        match merged {
            Some((_, qubits)) => {
                let b = it.next().unwrap();
                let mut params = a.params;
                params.extend(b.params);
                c.units.push(Unit { token, qubits, params });
            }
            None => c.units.push(a),
        }
    }
}

/// Greedy merge loop: take the most frequent pair (ties to the smallest key),
/// give it a new token, rewrite left to right without overlap, repeat until
/// the best count drops below `min_frequency` or `max_iterations` merges.
pub fn run_gpe(corpus: &[Circuit], min_frequency: usize, max_iterations: usize) -> Result<GpeOutput> {
    if min_frequency < 2 {
        return Err(Error::InvalidParameter("GPE min_frequency must be at least 2".into()));
    }
    let mut base_counts = [0usize; 8];
    for c in corpus {
        for g in c.gates() {
            base_counts[g.kind().index()] += 1;
        }
    }
    let mut encoded: Vec<EncodedCircuit> = corpus.iter().map(encode_circuit).collect();
    let total = |e: &[EncodedCircuit]| e.iter().map(|c| c.units.len()).sum::<usize>();
    let mut token_counts = vec![total(&encoded)];
    let mut vocab = GpeVocab {
        merges: Vec::new(),
        min_frequency,
        max_iterations,
        base_counts,
    };
    while vocab.merges.len() < max_iterations {
        let counts = count_pairs(encoded.iter());
        let mut best: Option<(&PairKey, usize)> = None;
        for (k, &n) in &counts {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((k, n));
            }
        }
        let Some((key, frequency)) = best else { break };
        if frequency < min_frequency {
            break;
        }
        let token = BASE_TOKENS + vocab.merges.len() as u32;
        let depth = vocab.depth(key.left).max(vocab.depth(key.right)) + 1;
        let key = key.clone();
        for c in &mut encoded {
            rewrite(c, &key, token);
        }
        vocab.merges.push(GpePattern {
            token,
            key,
            depth,
            frequency,
        });
        token_counts.push(total(&encoded));
    }
    Ok(GpeOutput {
        vocab,
        corpus: encoded,
        token_counts,
    })
}

impl GpeVocab {
    pub fn pattern(&self, token: u32) -> Option<&GpePattern> {
        token
            .checked_sub(BASE_TOKENS)
            .and_then(|i| self.merges.get(i as usize))
    }

    /// 0 for base gates; one more than the deeper constituent otherwise.
    pub fn depth(&self, token: u32) -> usize {
        self.pattern(token).map_or(0, |p| p.depth)
    }

    pub fn arity(&self, token: u32) -> usize {
        match self.pattern(token) {
            Some(p) => p.key.arity(),
            None => GateKind::ALL.get(token as usize).map_or(0, |k| k.arity()),
        }
    }

    pub fn max_depth(&self) -> usize {
        self.merges.iter().map(|p| p.depth).max().unwrap_or(0)
    }

    /// Primitive (kind, qubits) sequence of a token placed on `qubits`.
    pub fn primitives(&self, token: u32, qubits: &[usize]) -> Result<Vec<(GateKind, Vec<usize>)>> {
        let mut out = Vec::new();
        self.expand_into(token, qubits, &mut out)?;
        Ok(out)
    }

    fn expand_into(&self, token: u32, qubits: &[usize], out: &mut Vec<(GateKind, Vec<usize>)>) -> Result<()> {
        if qubits.len() != self.arity(token) {
            return Err(Error::InvalidGate(format!(
                "token {token} needs {} qubits, got {}",
                self.arity(token),
                qubits.len()
            )));
        }
        match self.pattern(token) {
            None => {
                let kind = *GateKind::ALL
                    .get(token as usize)
                    .ok_or_else(|| Error::InvalidGate(format!("unknown token {token}")))?;
                out.push((kind, qubits.to_vec()));
            }
            Some(p) => {
                let pick = |roles: &[u8]| roles.iter().map(|&r| qubits[r as usize]).collect::<Vec<_>>();
                self.expand_into(p.key.left, &pick(&p.key.left_roles), out)?;
                self.expand_into(p.key.right, &pick(&p.key.right_roles), out)?;
            }
        }
        Ok(())
    }

    /// Rebuilds the primitive circuit, angles included.
    pub fn decode(&self, c: &EncodedCircuit) -> Result<Circuit> {
        let mut circuit = Circuit::new(c.num_qubits)?;
        for u in &c.units {
            let mut params = u.params.iter().copied();
            for (kind, qs) in self.primitives(u.token, &u.qubits)? {
                let nc = kind.num_controls();
                let theta = if kind.is_parameterized() {
                    Some(params.next().ok_or_else(|| Error::format("unit is missing an angle"))?)
                } else {
                    None
                };
                circuit.push(GateInstance::new(kind, qs[..nc].to_vec(), qs[nc..].to_vec(), theta)?)?;
            }
            if params.next().is_some() {
                return Err(Error::format("unit carries surplus angles"));
            }
        }
        Ok(circuit)
    }

    pub fn label(&self, token: u32) -> String {
        match GateKind::ALL.get(token as usize) {
            Some(k) => k.name().to_string(),
            None => format!("g{token}"),
        }
    }

    /// Primitive gates of a token on roles `0..arity`, e.g. `["h(0)", "cx(0,1)"]`.
    pub fn describe(&self, token: u32) -> Vec<String> {
        let roles: Vec<usize> = (0..self.arity(token)).collect();
        self.primitives(token, &roles)
            .unwrap_or_default()
            .into_iter()
            .map(|(k, qs)| {
                let qs: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
                format!("{}({})", k.name(), qs.join(","))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub token: u32,
    pub label: String,
    pub depth: usize,
    pub frequency: usize,
    pub arity: usize,
    pub gates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub depth: usize,
    pub entries: Vec<ReportEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpeReport {
    pub merges: usize,
    pub min_frequency: usize,
    pub depths: Vec<DepthReport>,
}

fn depth_report(vocab: &GpeVocab, depth: usize, top_k: usize) -> DepthReport {
    let mut entries: Vec<ReportEntry> = if depth == 0 {
        GateKind::ALL
            .iter()
            .filter(|k| vocab.base_counts[k.index()] > 0)
            .map(|k| (k.index() as u32, vocab.base_counts[k.index()]))
            .map(|(t, n)| entry(vocab, t, n))
            .collect()
    } else {
        vocab
            .merges
            .iter()
            .filter(|p| p.depth == depth)
            .map(|p| entry(vocab, p.token, p.frequency))
            .collect()
    };
    // Stable sort keeps discovery order among equal counts.
    entries.sort_by(|a, b| b.frequency.cmp(&a.frequency));
    entries.truncate(top_k);
    DepthReport { depth, entries }
}

fn entry(vocab: &GpeVocab, token: u32, frequency: usize) -> ReportEntry {
    ReportEntry {
        token,
        label: vocab.label(token),
        depth: vocab.depth(token),
        frequency,
        arity: vocab.arity(token),
        gates: vocab.describe(token),
    }
}

/// Top-`top_k` structures per depth. `by_depth = Some(0)` gives the base
/// gate histogram; `None` lists every merge depth (and nothing for an empty
/// vocabulary).
pub fn report_structures(vocab: &GpeVocab, top_k: usize, by_depth: Option<usize>) -> GpeReport {
    let depths = match by_depth {
        Some(d) => vec![depth_report(vocab, d, top_k)],
        None => (1..=vocab.max_depth()).map(|d| depth_report(vocab, d, top_k)).collect(),
    };
    GpeReport {
        merges: vocab.merges.len(),
        min_frequency: vocab.min_frequency,
        depths,
    }
}

impl GpeReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} merges (min frequency {})", self.merges, self.min_frequency);
        for d in &self.depths {
            let _ = writeln!(s, "depth {}:", d.depth);
            for e in &d.entries {
                let _ = writeln!(s, "  {:>6}  {:<6} {}", e.frequency, e.label, e.gates.join(" "));
            }
        }
        s
    }
}

/// Histogram of raw angles of `kind` over `[0, period)` in `bins` bins.
pub fn parameter_histogram(corpus: &[Circuit], kind: GateKind, bins: usize) -> Vec<usize> {
    let mut hist = vec![0; bins];
    let Some(period) = kind.param_period() else { return hist };
    if bins == 0 {
        return hist;
    }
    for g in corpus.iter().flat_map(|c| c.gates()).filter(|g| g.kind() == kind) {
        let theta = g.theta().unwrap_or(0.0);
        let b = ((theta / period) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circ(n: usize, gates: Vec<GateInstance>) -> Circuit {
        Circuit::from_gates(n, gates).unwrap()
    }

    #[test]
    fn symmetric_gate_orientation_is_ignored() {
        let a = circ(3, vec![GateInstance::cp(0, 1, 0.3), GateInstance::h(0)]);
        let b = circ(3, vec![GateInstance::cp(1, 2, 0.3), GateInstance::h(2)]);
        let ka: Vec<_> = find_pairs(&[a]).into_keys().collect();
        let kb: Vec<_> = find_pairs(&[b]).into_keys().collect();
        assert_eq!(ka, kb);
    }

    #[test]
    fn rewrite_does_not_overlap() {
        let c = circ(1, vec![GateInstance::h(0); 3]);
        let out = run_gpe(&[c.clone(), c], 2, 1).unwrap();
        assert_eq!(out.vocab.merges[0].frequency, 4);
        assert_eq!(out.corpus[0].units.len(), 2);
        assert_eq!(out.token_counts, vec![6, 4]);
    }

    #[test]
    fn decode_rejects_bad_arity() {
        let vocab = GpeVocab {
            merges: vec![],
            min_frequency: 2,
            max_iterations: 1,
            base_counts: [0; 8],
        };
        let bad = EncodedCircuit {
            num_qubits: 2,
            units: vec![Unit {
                token: 1,
                qubits: vec![0],
                params: vec![],
            }],
        };
        assert!(vocab.decode(&bad).is_err());
    }
}
