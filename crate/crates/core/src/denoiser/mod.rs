//! A small trainable velocity predictor and an exact oracle.
//!
//! The trainable model is a multilayer perceptron over the flattened
//! `(h_t, w_t̃)` latent. Sinusoidal features of both times pass through a
//! learned projection, and the condition goes through a learned linear
//! projector. The empty condition is a learned vector `φ` instead. Both are
//! added to the first pre-activation, followed by GELU hidden layers and a
//! linear head split back into `(v_h, v_w)`. All parameters live in one flat
//! buffer, which keeps the optimizer, checkpoints and gradient checks simple.

mod checkpoint;
mod oracle;
mod train;

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffusion::{Condition, Denoiser, DenoiserInput, Geometry};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use oracle::OracleDenoiser;
pub use train::{
    batch_loss, loss_and_grad, loss_batch, prepare_batch, sample_times, train, Adam, LossWeights, OneCycle,
    PreparedBatch, TimeDraw, TraceRow, TrainConfig, TrainExample, TrainReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: usize,
    /// Number of hidden layers (at least 1).
    pub layers: usize,
    /// Sinusoid frequencies per time input.
    pub time_freqs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            layers: 3,
            time_freqs: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Slot {
    pub off: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

/// Offsets of every tensor in the flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub w_in: Slot,
    pub b_in: Slot,
    pub w_time: Slot,
    pub w_cond: Slot,
    pub b_cond: Slot,
    pub phi: Slot,
    pub hidden: Vec<(Slot, Slot)>,
    pub w_out: Slot,
    pub b_out: Slot,
    pub total: usize,
}

impl Layout {
    fn new(geo: &Geometry, cfg: &ModelConfig) -> Self {
        let d = geo.h_len() + geo.w_len();
        let hd = cfg.hidden;
        let mut off = 0;
        let mut slot = |rows: usize, cols: usize| {
            let s = Slot { off, rows, cols };
            off += rows * cols;
            s
        };
        let w_in = slot(hd, d);
        let b_in = slot(hd, 1);
        let w_time = slot(hd, 4 * cfg.time_freqs);
        let w_cond = slot(hd, cond_dim(geo));
        let b_cond = slot(hd, 1);
        let phi = slot(hd, 1);
        let hidden = (1..cfg.layers).map(|_| (slot(hd, hd), slot(hd, 1))).collect();
        let w_out = slot(d, hd);
        let b_out = slot(d, 1);
        Layout {
            w_in,
            b_in,
            w_time,
            w_cond,
            b_cond,
            phi,
            hidden,
            w_out,
            b_out,
            total: off,
        }
    }

    /// Tensors in storage order, with their names.
    pub fn tensors(&self) -> Vec<(&'static str, Slot)> {
        let mut v = vec![
            ("w_in", self.w_in),
            ("b_in", self.b_in),
            ("w_time", self.w_time),
            ("w_cond", self.w_cond),
            ("b_cond", self.b_cond),
            ("phi", self.phi),
        ];
        for (w, b) in &self.hidden {
            v.push(("w_hidden", *w));
            v.push(("b_hidden", *b));
        }
        v.push(("w_out", self.w_out));
        v.push(("b_out", self.b_out));
        v
    }
}

/// Unitary features plus the gate-kind multi-hot.
pub fn cond_dim(geo: &Geometry) -> usize {
    geo.unitary_features() + 8
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)
const GELU_K: f64 = 0.044_715;

#[inline]
fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

#[inline]
fn gelu_grad(x: f64) -> f64 {
    let th = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    geometry: Geometry,
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
}

/// Forward activations kept for backpropagation.
pub(crate) struct Cache {
    pre: Vec<Array2<f64>>,
    act: Vec<Array2<f64>>,
    pub out: Array2<f64>,
}

/// Network inputs assembled from a batch of queries.
pub(crate) struct Inputs {
    x: Array2<f64>,
    time: Array2<f64>,
    cond: Array2<f64>,
    empty: Vec<bool>,
}

impl ToyDenoiser {
    pub fn new<R: Rng + ?Sized>(geometry: Geometry, config: ModelConfig, rng: &mut R) -> Self {
        assert!(config.layers >= 1 && config.hidden >= 1, "model needs a hidden layer");
        let layout = Layout::new(&geometry, &config);
        let mut params = vec![0.0; layout.total];
        let mut fill = |s: Slot, std: f64| {
            for p in &mut params[s.off..s.off + s.len()] {
                let z: f64 = rng.sample(StandardNormal);
                *p = std * z;
            }
        };
        fill(layout.w_in, 1.0 / (layout.w_in.cols as f64).sqrt());
        fill(layout.w_time, 1.0 / (layout.w_time.cols as f64).sqrt());
        fill(layout.w_cond, 1.0 / (layout.w_cond.cols as f64).sqrt());
        fill(layout.phi, 1.0);
        for (w, _) in &layout.hidden {
            fill(*w, 1.0 / (w.cols as f64).sqrt());
        }
        fill(layout.w_out, 1.0 / (layout.w_out.cols as f64).sqrt());
        Self {
            geometry,
            config,
            layout,
            params,
        }
    }

    pub(crate) fn from_parts(geometry: Geometry, config: ModelConfig, params: Vec<f64>) -> Option<Self> {
        let layout = Layout::new(&geometry, &config);
        (params.len() == layout.total).then_some(Self {
            geometry,
            config,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Named parameter ranges in the flat buffer, in storage order.
    pub fn param_groups(&self) -> Vec<(&'static str, std::ops::Range<usize>)> {
        self.layout
            .tensors()
            .into_iter()
            .map(|(n, s)| (n, s.off..s.off + s.len()))
            .collect()
    }

    fn mat(&self, s: Slot) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((s.rows, s.cols), &self.params[s.off..s.off + s.len()]).unwrap()
    }

    fn vector(&self, s: Slot) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[s.off..s.off + s.len()])
    }

    pub(crate) fn time_features(&self, t: f64, t_tilde: f64, out: &mut [f64]) {
        let k = self.config.time_freqs;
        for (j, time) in [t, t_tilde].into_iter().enumerate() {
            for f in 0..k {
                let (s, c) = (PI * (1u64 << f) as f64 * time).sin_cos();
                out[j * 2 * k + f] = s;
                out[j * 2 * k + k + f] = c;
            }
        }
    }

    pub(crate) fn inputs(&self, input: &DenoiserInput<'_>) -> Inputs {
        let b = input.len();
        let (hl, wl) = (self.geometry.h_len(), self.geometry.w_len());
        assert_eq!(input.h.len(), b * hl, "h batch does not match geometry");
        assert_eq!(input.w.len(), b * wl, "w batch does not match geometry");
        let mut x = Array2::zeros((b, hl + wl));
        let mut time = Array2::zeros((b, self.layout.w_time.cols));
        let cd = self.layout.w_cond.cols;
        let mut cond = Array2::zeros((b, cd));
        let mut empty = vec![false; b];
        for r in 0..b {
            let mut row = x.row_mut(r);
            let row = row.as_slice_mut().unwrap();
            row[..hl].copy_from_slice(&input.h[r * hl..(r + 1) * hl]);
            row[hl..].copy_from_slice(&input.w[r * wl..(r + 1) * wl]);
            self.time_features(input.t[r], input.t_tilde[r], time.row_mut(r).as_slice_mut().unwrap());
            match input.cond[r] {
                Condition::Empty => empty[r] = true,
                Condition::Given { unitary, gate_mask } => {
                    assert_eq!(unitary.len() + 8, cd, "condition does not match geometry");
                    let mut c = cond.row_mut(r);
                    let c = c.as_slice_mut().unwrap();
                    c[..unitary.len()].copy_from_slice(unitary);
                    for (i, &m) in gate_mask.iter().enumerate() {
                        c[unitary.len() + i] = m as u8 as f64;
                    }
                }
            }
        }
        Inputs { x, time, cond, empty }
    }

    pub(crate) fn forward(&self, inp: &Inputs) -> Cache {
        let l = &self.layout;
        let mut a = inp.x.dot(&self.mat(l.w_in).t());
        a += &self.vector(l.b_in);
        a += &inp.time.dot(&self.mat(l.w_time).t());
        let cproj = inp.cond.dot(&self.mat(l.w_cond).t());
        let (b_cond, phi) = (self.vector(l.b_cond), self.vector(l.phi));
        for (r, mut row) in a.axis_iter_mut(Axis(0)).enumerate() {
            if inp.empty[r] {
                row += &phi;
            } else {
                row += &cproj.row(r);
                row += &b_cond;
            }
        }
        let mut pre = vec![a];
        let mut act = vec![pre[0].mapv(gelu)];
        for (w, b) in &l.hidden {
            let mut a = act.last().unwrap().dot(&self.mat(*w).t());
            a += &self.vector(*b);
            act.push(a.mapv(gelu));
            pre.push(a);
        }
        let mut out = act.last().unwrap().dot(&self.mat(l.w_out).t());
        out += &self.vector(l.b_out);
        Cache { pre, act, out }
    }

    /// Gradient of `Σ d_out ⊙ out` with respect to every parameter.
    pub(crate) fn backward(&self, inp: &Inputs, cache: &Cache, d_out: &Array2<f64>) -> Vec<f64> {
        let l = &self.layout;
        let mut grad = vec![0.0; l.total];
        let put = |grad: &mut Vec<f64>, s: Slot, m: ArrayView2<'_, f64>| {
            let dst = &mut grad[s.off..s.off + s.len()];
            for (d, v) in dst.iter_mut().zip(m.iter()) {
                *d += v;
            }
        };
        let put_vec = |grad: &mut Vec<f64>, s: Slot, v: ndarray::Array1<f64>| {
            for (d, x) in grad[s.off..s.off + s.len()].iter_mut().zip(v.iter()) {
                *d += x;
            }
        };

        let last = cache.act.last().unwrap();
        put(&mut grad, l.w_out, d_out.t().dot(last).view());
        put_vec(&mut grad, l.b_out, d_out.sum_axis(Axis(0)));
        let mut dz = d_out.dot(&self.mat(l.w_out));

        for k in (0..cache.pre.len()).rev() {
            let mut da = dz;
            da.zip_mut_with(&cache.pre[k], |g, &a| *g *= gelu_grad(a));
            if k > 0 {
                let (w, b) = l.hidden[k - 1];
                put(&mut grad, w, da.t().dot(&cache.act[k - 1]).view());
                put_vec(&mut grad, b, da.sum_axis(Axis(0)));
                dz = da.dot(&self.mat(w));
            } else {
                put(&mut grad, l.w_in, da.t().dot(&inp.x).view());
                put_vec(&mut grad, l.b_in, da.sum_axis(Axis(0)));
                put(&mut grad, l.w_time, da.t().dot(&inp.time).view());
                put(&mut grad, l.w_cond, da.t().dot(&inp.cond).view());
                let h = l.b_cond.rows;
                for (r, row) in da.axis_iter(Axis(0)).enumerate() {
                    let dst = if inp.empty[r] { l.phi } else { l.b_cond };
                    for (d, v) in grad[dst.off..dst.off + h].iter_mut().zip(row.iter()) {
                        *d += v;
                    }
                }
                break;
            }
        }
        grad
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

impl Denoiser for ToyDenoiser {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn predict(&self, input: &DenoiserInput<'_>) -> (Vec<f64>, Vec<f64>) {
        let inp = self.inputs(input);
        let out = self.forward(&inp).out;
        split_output(&out, self.geometry.h_len())
    }
}

pub(crate) fn split_output(out: &Array2<f64>, hl: usize) -> (Vec<f64>, Vec<f64>) {
    let b = out.nrows();
    let wl = out.ncols() - hl;
    let mut vh = Vec::with_capacity(b * hl);
    let mut vw = Vec::with_capacity(b * wl);
    for row in out.axis_iter(Axis(0)) {
        let row = row.to_slice().unwrap();
        vh.extend_from_slice(&row[..hl]);
        vw.extend_from_slice(&row[hl..]);
    }
    (vh, vw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geo() -> Geometry {
        Geometry {
            num_qubits: 1,
            positions: 2,
            d_h: 3,
            d_w: 3,
        }
    }

    #[test]
    fn output_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ModelConfig {
            hidden: 5,
            layers: 2,
            time_freqs: 2,
        };
        let m = ToyDenoiser::new(geo(), cfg, &mut rng);
        let h = vec![0.1; 2 * 6];
        let w = vec![-0.2; 2 * 6];
        let c = Condition::Given {
            unitary: vec![0.5; 8],
            gate_mask: [true; 8],
        };
        let e = Condition::Empty;
        let input = DenoiserInput {
            h: &h,
            w: &w,
            t: &[0.3, 0.9],
            t_tilde: &[0.1, 1.0],
            cond: &[&c, &e],
        };
        let (vh, vw) = m.predict(&input);
        assert_eq!((vh.len(), vw.len()), (12, 12));
        assert_eq!(m.predict(&input), (vh, vw));
        assert_eq!(m.num_params(), m.layout.total);
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for x in [-3.0, -0.5, 0.0, 0.7, 2.5] {
            let fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }
}
