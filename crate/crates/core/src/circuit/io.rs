//! JSON-lines circuit interchange: one `{n, gates: [{kind, controls, targets, theta?}]}` per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Circuit, GateInstance, GateKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub n: usize,
    pub gates: Vec<GateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: String,
    #[serde(default)]
    pub controls: Vec<usize>,
    #[serde(default)]
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl From<&Circuit> for CircuitRecord {
    fn from(c: &Circuit) -> Self {
        CircuitRecord {
            n: c.num_qubits(),
            gates: c
                .gates()
                .iter()
                .map(|g| GateRecord {
                    kind: g.kind().name().to_string(),
                    controls: g.controls().to_vec(),
                    targets: g.targets().to_vec(),
                    theta: g.theta(),
                })
                .collect(),
        }
    }
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRecord) -> Result<Self> {
        // Guard against absurd qubit counts before anything allocates 2^n.
        if r.n == 0 || r.n > 16 {
            return Err(Error::format(format!("unsupported qubit count {}", r.n)));
        }
        let mut c = Circuit::new(r.n)?;
        for g in r.gates {
            let kind = GateKind::from_name(&g.kind)
                .ok_or_else(|| Error::format(format!("unknown gate kind {:?}", g.kind)))?;
            c.push(GateInstance::new(kind, g.controls, g.targets, g.theta)?)?;
        }
        Ok(c)
    }
}

pub fn parse_circuit_line(line: &str) -> Result<Circuit> {
    let rec: CircuitRecord = serde_json::from_str(line)?;
    Circuit::try_from(rec)
}

/// Blank lines are skipped.
pub fn read_circuits_jsonl<R: BufRead>(reader: R) -> Result<Vec<Circuit>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c = parse_circuit_line(&line)
            .map_err(|e| Error::format(format!("line {}: {e}", i + 1)))?;
        out.push(c);
    }
    Ok(out)
}

pub fn write_circuits_jsonl<W: Write>(mut writer: W, circuits: &[Circuit]) -> Result<()> {
    for c in circuits {
        serde_json::to_writer(&mut writer, &CircuitRecord::from(c))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
