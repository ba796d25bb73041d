//! Circuit-unitary datasets and their binary container.
//!
//! ```text
//! "QCDS"  u32 version
//! u64 seed
//! u32 config length, config TOML (UTF-8)
//! u8  gate-set bits (bit i = GateKind::ALL[i])
//! u32 positions
//! u64 record count
//! per record: u32 num_qubits, u32 gate_count, u8 gate mask bits,
//!             token matrix bytes, unitary bytes
//! ```

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{kinds_of_mask, mask_bits, mask_from_bits};
use crate::circuit::{detokenize, tokenize, Circuit, GateKind, GateSet, TokenMatrix};
use crate::error::{Error, Result};
use crate::sim::{circuit_unitary, random_gate, Unitary};

pub const DATASET_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"QCDS";
/// Stored and recomputed unitaries must agree entrywise to this.
pub const RECORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub tokens: TokenMatrix,
    pub unitary: Unitary,
    /// Gate kinds the circuit was allowed to use (its condition).
    pub gate_mask: [bool; 8],
    pub num_qubits: usize,
    pub gate_count: usize,
}

impl DatasetRecord {
    pub fn from_circuit(circuit: &Circuit, gate_mask: [bool; 8], positions: usize, gate_set: &GateSet) -> Result<Self> {
        Ok(Self {
            tokens: tokenize(circuit, positions, gate_set)?,
            unitary: circuit_unitary(circuit),
            gate_mask,
            num_qubits: circuit.num_qubits(),
            gate_count: circuit.len(),
        })
    }

    pub fn circuit(&self, gate_set: &GateSet) -> Result<Circuit> {
        detokenize(&self.tokens, gate_set)
    }

    /// Structure without parameters; equal keys mean the same ansatz.
    pub fn ansatz_key(&self) -> Vec<u8> {
        self.tokens.structure().to_bytes()
    }

    pub fn kinds(&self) -> Vec<GateKind> {
        kinds_of_mask(&self.gate_mask)
    }

    /// Recomputes the unitary from the stored tokens and compares.
    pub fn validate(&self, gate_set: &GateSet) -> Result<()> {
        let c = self.circuit(gate_set)?;
        if c.len() != self.gate_count || c.num_qubits() != self.num_qubits {
            return Err(Error::format("record gate count or width disagrees with its tokens"));
        }
        let u = circuit_unitary(&c);
        let diff = (u.matrix() - self.unitary.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(diff <= RECORD_TOL) {
            return Err(Error::format(format!("stored unitary deviates by {diff:.3e}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seed: u64,
    /// Config the data was generated from, as TOML.
    pub config: String,
    pub gate_set: GateSet,
    pub positions: usize,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            r.validate(&self.gate_set)
                .map_err(|e| Error::format(format!("record {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn with_records(&self, records: Vec<DatasetRecord>) -> Dataset {
        Dataset {
            seed: self.seed,
            config: self.config.clone(),
            gate_set: self.gate_set.clone(),
            positions: self.positions,
            records,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.config.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config.as_bytes());
        let mut set = [false; 8];
        for k in self.gate_set.kinds() {
            set[k.index()] = true;
        }
        out.push(mask_bits(&set));
        out.extend_from_slice(&(self.positions as u32).to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&(r.num_qubits as u32).to_le_bytes());
            out.extend_from_slice(&(r.gate_count as u32).to_le_bytes());
            out.push(mask_bits(&r.gate_mask));
            out.extend_from_slice(&r.tokens.to_bytes());
            out.extend_from_slice(&r.unitary.to_bytes());
        }
        out
    }

    /// Parses the container. Structure is checked here; call
    /// [`Dataset::validate`] to recheck every unitary.
    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("not a dataset (bad magic)"));
        }
        let version = r.u32()?;
        if version != DATASET_VERSION {
            return Err(Error::format(format!("unsupported dataset version {version}")));
        }
        let seed = r.u64()?;
        let len = r.u32()? as usize;
        let config = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format("dataset config is not UTF-8"))?
            .to_string();
        let set = mask_from_bits(r.take(1)?[0]);
        let gate_set = GateSet::new(&kinds_of_mask(&set))?;
        let positions = r.u32()? as usize;
        if positions == 0 || positions > 1 << 12 {
            return Err(Error::format(format!("dataset positions {positions} out of range")));
        }
        let count = r.u64()?;
        let mut records = Vec::new();
        for i in 0..count {
            let num_qubits = r.u32()? as usize;
            if num_qubits == 0 || num_qubits > crate::sim::MAX_QUBITS {
                return Err(Error::format(format!("record {i}: {num_qubits} qubits")));
            }
            let gate_count = r.u32()? as usize;
            let gate_mask = mask_from_bits(r.take(1)?[0]);
            let tokens = TokenMatrix::from_bytes(r.take(TokenMatrix::byte_len(num_qubits, positions))?, num_qubits, positions)?;
            let (unitary, used) = Unitary::from_bytes_prefix(&bytes[r.pos..])?;
            r.pos += used;
            if unitary.num_qubits() != num_qubits {
                return Err(Error::format(format!("record {i}: unitary width differs from tokens")));
            }
            if gate_count > positions {
                return Err(Error::format(format!("record {i}: gate count {gate_count} exceeds positions")));
            }
            records.push(DatasetRecord {
                tokens,
                unitary,
                gate_mask,
                num_qubits,
                gate_count,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::format("trailing bytes after dataset"));
        }
        Ok(Dataset {
            seed,
            config,
            gate_set,
            positions,
            records,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("dataset truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub qubits: [usize; 2],
    pub gates: [usize; 2],
    pub kinds: Vec<GateKind>,
    pub positions: usize,
    /// Target number of records, resampled copies included.
    pub count: usize,
    pub resample_k: usize,
}

impl GenSpec {
    fn validate(&self) -> Result<()> {
        if self.qubits[0] == 0 || self.qubits[0] > self.qubits[1] || self.gates[0] > self.gates[1] {
            return Err(Error::InvalidParameter("empty qubit or gate range".into()));
        }
        if self.gates[1] > self.positions {
            return Err(Error::InvalidParameter("gate range exceeds positions".into()));
        }
        if !self.kinds.iter().any(|k| k.arity() <= self.qubits[1]) {
            return Err(Error::InvalidParameter("no gate kind fits the qubit range".into()));
        }
        Ok(())
    }
}

/// One random ansatz (with angles): width and length uniform over their
/// ranges, a uniform nonempty subset of usable kinds as the allowed set,
/// then gates drawn uniformly from that subset with uniform placement.
pub fn random_circuit<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Result<(Circuit, [bool; 8])> {
    spec.validate()?;
    let n = loop {
        let n = rng.random_range(spec.qubits[0]..=spec.qubits[1]);
        if spec.kinds.iter().any(|k| k.arity() <= n) {
            break n;
        }
    };
    let usable: Vec<GateKind> = spec.kinds.iter().copied().filter(|k| k.arity() <= n).collect();
    let subset: Vec<GateKind> = loop {
        let s: Vec<GateKind> = usable.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            break s;
        }
    };
    let len = rng.random_range(spec.gates[0]..=spec.gates[1]);
    let mut c = Circuit::new(n)?;
    for _ in 0..len {
        c.push(random_gate(&subset, n, rng)?)?;
    }
    let mut mask = [false; 8];
    for k in &subset {
        mask[k.index()] = true;
    }
    Ok((c, mask))
}

fn redraw_angles<R: Rng + ?Sized>(c: &Circuit, rng: &mut R) -> Result<Circuit> {
    let gates = c
        .gates()
        .iter()
        .map(|g| match g.kind().param_period() {
            Some(p) => g.with_theta(rng.random::<f64>() * p),
            None => g.clone(),
        })
        .collect();
    Circuit::from_gates(c.num_qubits(), gates)
}

/// Copies of a record with fresh uniform angles, `k` per parameterized ansatz.
pub fn resample_record<R: Rng + ?Sized>(
    record: &DatasetRecord,
    k: usize,
    positions: usize,
    gate_set: &GateSet,
    rng: &mut R,
) -> Result<Vec<DatasetRecord>> {
    let c = record.circuit(gate_set)?;
    if c.num_parameterized() == 0 {
        return Ok(Vec::new());
    }
    (0..k)
        .map(|_| DatasetRecord::from_circuit(&redraw_angles(&c, rng)?, record.gate_mask, positions, gate_set))
        .collect()
}

/// Every record followed by its `k` resampled copies.
pub fn resample_parameters<R: Rng + ?Sized>(
    records: &[DatasetRecord],
    k: usize,
    positions: usize,
    gate_set: &GateSet,
    rng: &mut R,
) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::with_capacity(records.len() * (k + 1));
    for r in records {
        out.push(r.clone());
        out.extend(resample_record(r, k, positions, gate_set, rng)?);
    }
    Ok(out)
}

/// Draws unique ansätze (by [`DatasetRecord::ansatz_key`]) until `count`
/// records exist, each parameterized ansatz contributing `1 + resample_k`.
/// Small spaces can saturate: drawing stops after `50·count` duplicate hits
/// and fewer records are returned.
pub fn generate_records<R: Rng + ?Sized>(spec: &GenSpec, gate_set: &GateSet, rng: &mut R) -> Result<Vec<DatasetRecord>> {
    spec.validate()?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(spec.count);
    let mut misses = 0usize;
    while out.len() < spec.count && misses < 50 * spec.count.max(1) {
        let (c, mask) = random_circuit(spec, rng)?;
        let rec = DatasetRecord::from_circuit(&c, mask, spec.positions, gate_set)?;
        if !seen.insert(rec.ansatz_key()) {
            misses += 1;
            continue;
        }
        let copies = resample_record(&rec, spec.resample_k, spec.positions, gate_set, rng)?;
        out.push(rec);
        out.extend(copies);
    }
    out.truncate(spec.count);
    Ok(out)
}

/// Holds out `quota` ansätze per gate count, one record each. Train keeps
/// every record of the other ansätze, so the two never share an ansatz.
pub fn balanced_test_split<R: Rng + ?Sized>(
    records: &[DatasetRecord],
    quota: usize,
    rng: &mut R,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>)> {
    let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.ansatz_key()).or_default().push(i);
    }
    let mut by_count: BTreeMap<usize, Vec<&Vec<u8>>> = BTreeMap::new();
    for (key, idx) in &groups {
        by_count.entry(records[idx[0]].gate_count).or_default().push(key);
    }
    let mut held: HashSet<&Vec<u8>> = HashSet::new();
    let mut test = Vec::new();
    for (count, keys) in &mut by_count {
        if keys.len() < quota {
            return Err(Error::InvalidParameter(format!(
                "only {} ansätze with {count} gates, quota is {quota}",
                keys.len()
            )));
        }
        let (chosen, _) = keys.partial_shuffle(rng, quota);
        for key in chosen.iter() {
            test.push(records[groups[*key][0]].clone());
            held.insert(*key);
        }
    }
    let train = records
        .iter()
        .filter(|r| !held.contains(&r.ansatz_key()))
        .cloned()
        .collect();
    Ok((train, test))
}
