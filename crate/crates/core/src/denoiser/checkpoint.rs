//! Binary checkpoint layout, all integers little-endian:
//!
//! ```text
//! "QCDN"  u32 version
//! u32 num_qubits, positions, d_h, d_w
//! u32 hidden, layers, time_freqs
//! u32 tensor count, then (u32 rows, u32 cols) per tensor
//! u64 parameter count, then that many f64
//! ```

use super::{Layout, ModelConfig, ToyDenoiser};
use crate::diffusion::Geometry;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"QCDN";

// Caps keep a corrupt header from requesting absurd allocations.
const MAX_DIM: u32 = 1 << 16;

pub fn write_checkpoint(model: &ToyDenoiser) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    let g = model.geometry;
    let c = model.config;
    let mut u32s = vec![
        CHECKPOINT_VERSION,
        g.num_qubits as u32,
        g.positions as u32,
        g.d_h as u32,
        g.d_w as u32,
        c.hidden as u32,
        c.layers as u32,
        c.time_freqs as u32,
    ];
    let tensors = model.layout.tensors();
    u32s.push(tensors.len() as u32);
    for (_, s) in &tensors {
        u32s.push(s.rows as u32);
        u32s.push(s.cols as u32);
    }
    for v in u32s {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(model.num_params() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("checkpoint truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let v = self.u32()?;
        if v == 0 || v > MAX_DIM {
            return Err(Error::format(format!("checkpoint {what} = {v} out of range")));
        }
        Ok(v as usize)
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ToyDenoiser> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("not a checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!("unsupported checkpoint version {version}")));
    }
    let geometry = Geometry {
        num_qubits: r.dim("num_qubits")?,
        positions: r.dim("positions")?,
        d_h: r.dim("d_h")?,
        d_w: r.dim("d_w")?,
    };
    if geometry.num_qubits > 8 {
        return Err(Error::format("checkpoint qubit count too large"));
    }
    let config = ModelConfig {
        hidden: r.dim("hidden")?,
        layers: r.dim("layers")?,
        time_freqs: r.dim("time_freqs")?,
    };
    if config.time_freqs > 52 || config.layers > 64 {
        return Err(Error::format("checkpoint config out of range"));
    }
    let count = r.u32()? as usize;
    let expected = Layout::new(&geometry, &config);
    let tensors = expected.tensors();
    if count != tensors.len() {
        return Err(Error::format(format!(
            "checkpoint lists {count} tensors, config implies {}",
            tensors.len()
        )));
    }
    for (name, s) in &tensors {
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        if (rows, cols) != (s.rows, s.cols) {
            return Err(Error::format(format!(
                "tensor {name} has shape {rows}x{cols}, expected {}x{}",
                s.rows, s.cols
            )));
        }
    }
    let n = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    if n != expected.total as u64 {
        return Err(Error::format("parameter count does not match layout"));
    }
    let body = r.take(expected.total * 8)?;
    if r.pos != bytes.len() {
        return Err(Error::format("trailing bytes after checkpoint"));
    }
    let params: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::format("checkpoint holds non-finite parameters"));
    }
    Ok(ToyDenoiser::from_parts(geometry, config, params).expect("length checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_rejects() {
        let geo = Geometry {
            num_qubits: 2,
            positions: 3,
            d_h: 5,
            d_w: 3,
        };
        let cfg = ModelConfig {
            hidden: 7,
            layers: 2,
            time_freqs: 3,
        };
        let m = ToyDenoiser::new(geo, cfg, &mut ChaCha8Rng::seed_from_u64(4));
        let bytes = write_checkpoint(&m);
        assert_eq!(read_checkpoint(&bytes).unwrap(), m);
        assert!(read_checkpoint(&bytes[..bytes.len() - 8]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(read_checkpoint(&bad).is_err());
        let mut bad = bytes;
        bad.extend_from_slice(&[0; 8]);
        assert!(read_checkpoint(&bad).is_err());
    }
}
