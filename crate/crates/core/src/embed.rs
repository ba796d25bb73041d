//! Fixed token and parameter embeddings, decoding, and mixing diagnostics.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{GateSet, TokenMatrix};
use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;

pub const DEFAULT_TOKEN_DIM: usize = 13;
pub const DEFAULT_PARAM_DIM: usize = 3;

/// Default softmax temperature `1/√d_h`.
pub fn default_temperature(d_h: usize) -> f64 {
    1.0 / (d_h as f64).sqrt()
}

/// `k` mutually orthogonal rows in `R^d`, each with zero element mean and
/// unit population variance (squared norm `d`).
fn zero_mean_orthogonal_rows<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k + 1 > d {
        return Err(Error::InvalidParameter(format!(
            "{k} zero-mean orthogonal rows need dimension ≥ {}, got {d}",
            k + 1
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        // Two passes of modified Gram–Schmidt against the ones direction and
        // the rows accepted so far.
        for _ in 0..2 {
            let mean = v.iter().sum::<f64>() / d as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            for r in &rows {
                let proj = dot(r, &v) / d as f64;
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-6 {
            continue;
        }
        let scale = (d as f64).sqrt() / norm;
        v.iter_mut().for_each(|x| *x *= scale);
        rows.push(v);
    }
    Ok(rows)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `N` orthogonal class vectors in `R^{d_h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBasis {
    d_h: usize,
    vectors: Vec<Vec<f64>>,
}

pub fn build_token_basis<R: Rng + ?Sized>(num_classes: usize, d_h: usize, rng: &mut R) -> Result<TokenBasis> {
    if num_classes == 0 {
        return Err(Error::InvalidParameter("token basis needs at least one class".into()));
    }
    Ok(TokenBasis {
        d_h,
        vectors: zero_mean_orthogonal_rows(num_classes, d_h, rng)?,
    })
}

impl TokenBasis {
    pub fn dim(&self) -> usize {
        self.d_h
    }

    pub fn num_classes(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, class: usize) -> &[f64] {
        &self.vectors[class]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `⟨h0^{(j)}, h⟩` for every class `j`.
    pub fn scores(&self, h: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(&self.vectors) {
            *o = dot(v, h);
        }
    }

    /// `softmax_j((1/τ)⟨h0^{(j)}, h⟩)`.
    pub fn probabilities(&self, h: &[f64], tau: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.num_classes()];
        self.scores(h, &mut p);
        softmax_in_place(&mut p, 1.0 / tau);
        p
    }

    /// Argmax class; ties go to the lowest index.
    pub fn hard_decode(&self, h: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, v) in self.vectors.iter().enumerate() {
            let s = dot(v, h);
            if s > best.1 {
                best = (j, s);
            }
        }
        best.0
    }
}

pub(crate) fn softmax_in_place(logits: &mut [f64], scale: f64) {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x * scale));
    let mut total = 0.0;
    for x in logits.iter_mut() {
        *x = (*x * scale - max).exp();
        total += *x;
    }
    logits.iter_mut().for_each(|x| *x /= total);
}

/// Circular parameter embedding `w0(λ) = cos(λπ) v1 + sin(λπ) v2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBasis {
    v1: Vec<f64>,
    v2: Vec<f64>,
}

pub fn build_param_basis<R: Rng + ?Sized>(d_w: usize, rng: &mut R) -> Result<ParamBasis> {
    let mut rows = zero_mean_orthogonal_rows(2, d_w, rng)?;
    let v2 = rows.pop().unwrap();
    let v1 = rows.pop().unwrap();
    Ok(ParamBasis { v1, v2 })
}

impl ParamBasis {
    pub fn dim(&self) -> usize {
        self.v1.len()
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    pub fn encode(&self, lambda: f64, out: &mut [f64]) {
        let (s, c) = (lambda * PI).sin_cos();
        for ((o, a), b) in out.iter_mut().zip(&self.v1).zip(&self.v2) {
            *o = c * a + s * b;
        }
    }

    pub fn encode_vec(&self, lambda: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.encode(lambda, &mut out);
        out
    }

    /// `λ̂ = atan2(⟨v2, w⟩, ⟨v1, w⟩)/π ∈ (−1, 1]`.
    pub fn decode(&self, w: &[f64]) -> Result<f64> {
        let (x, y) = (dot(&self.v1, w), dot(&self.v2, w));
        if x == 0.0 && y == 0.0 {
            return Err(Error::UndefinedAngle);
        }
        Ok(y.atan2(x) / PI)
    }
}

/// Dense latents for one circuit: `h` is `n × t × d_h` (qubit-major),
/// `w` is `t × d_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLatent {
    pub num_qubits: usize,
    pub positions: usize,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
}

/// Gate set plus both bases: everything needed to move between token
/// matrices and latents.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    gate_set: GateSet,
    tokens: TokenBasis,
    params: ParamBasis,
}

impl EmbeddingSpace {
    pub fn new(gate_set: GateSet, tokens: TokenBasis, params: ParamBasis) -> Result<Self> {
        if tokens.num_classes() != gate_set.num_classes() {
            return Err(Error::DimensionMismatch(format!(
                "token basis has {} classes, gate set needs {}",
                tokens.num_classes(),
                gate_set.num_classes()
            )));
        }
        Ok(Self {
            gate_set,
            tokens,
            params,
        })
    }

    /// Builds both bases from one RNG: tokens first, then parameters.
    pub fn build<R: Rng + ?Sized>(gate_set: GateSet, d_h: usize, d_w: usize, rng: &mut R) -> Result<Self> {
        let tokens = build_token_basis(gate_set.num_classes(), d_h, rng)?;
        let params = build_param_basis(d_w, rng)?;
        Self::new(gate_set, tokens, params)
    }

    pub fn gate_set(&self) -> &GateSet {
        &self.gate_set
    }

    pub fn token_basis(&self) -> &TokenBasis {
        &self.tokens
    }

    pub fn param_basis(&self) -> &ParamBasis {
        &self.params
    }

    pub fn d_h(&self) -> usize {
        self.tokens.dim()
    }

    pub fn d_w(&self) -> usize {
        self.params.dim()
    }

    pub fn h_len(&self, n: usize, t: usize) -> usize {
        n * t * self.d_h()
    }

    pub fn w_len(&self, t: usize) -> usize {
        t * self.d_w()
    }

    pub fn encode(&self, m: &TokenMatrix) -> Result<CircuitLatent> {
        let (n, t, d_h) = (m.num_qubits(), m.positions(), self.d_h());
        let mut h = vec![0.0; n * t * d_h];
        for q in 0..n {
            for c in 0..t {
                let tok = m.token(q, c);
                let class = self
                    .gate_set
                    .class_of(tok)
                    .ok_or_else(|| Error::InvalidColumn {
                        column: c,
                        reason: format!("token {tok} is not in the gate set"),
                    })?;
                let off = (q * t + c) * d_h;
                h[off..off + d_h].copy_from_slice(self.tokens.vector(class));
            }
        }
        let d_w = self.d_w();
        let mut w = vec![0.0; t * d_w];
        for (c, &lam) in m.params().iter().enumerate() {
            self.params.encode(lam, &mut w[c * d_w..(c + 1) * d_w]);
        }
        Ok(CircuitLatent {
            num_qubits: n,
            positions: t,
            h,
            w,
        })
    }

    /// Hard-decodes every cell. λ is read from `w` only for columns whose
    /// decoded kind is parameterized; other columns get λ = 0.
    pub fn decode(&self, latent: &CircuitLatent) -> Result<TokenMatrix> {
        let (n, t, d_h, d_w) = (latent.num_qubits, latent.positions, self.d_h(), self.d_w());
        if latent.h.len() != n * t * d_h || latent.w.len() != t * d_w {
            return Err(Error::DimensionMismatch("latent does not match its geometry".into()));
        }
        let mut tokens = Vec::with_capacity(n * t);
        for cell in latent.h.chunks_exact(d_h) {
            let class = self.tokens.hard_decode(cell);
            tokens.push(self.gate_set.token_of_class(class).unwrap());
        }
        let mut params = vec![0.0; t];
        for (c, p) in params.iter_mut().enumerate() {
            let parameterized = (0..n).any(|q| {
                self.gate_set
                    .kind_of(tokens[q * t + c])
                    .is_some_and(|k| k.is_parameterized())
            });
            if parameterized {
                *p = self.params.decode(&latent.w[c * d_w..(c + 1) * d_w])?;
            }
        }
        TokenMatrix::new(n, t, tokens, params)
    }

    /// Per-cell class probabilities, in the same cell order as `h`.
    pub fn token_probabilities(&self, h: &[f64], tau: f64) -> Vec<Vec<f64>> {
        h.chunks_exact(self.d_h())
            .map(|cell| self.tokens.probabilities(cell, tau))
            .collect()
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Frozen noise draws for flip-probability estimates.
///
/// Sample `s` starts from class `s mod N` and stores the projections
/// `⟨h0^{(j)}, ε_s⟩`, so evaluating `p_flip` at any `ᾱ` reuses the same
/// noise (common random numbers across `ᾱ`).
#[derive(Debug, Clone)]
pub struct FlipSampler {
    classes: usize,
    gram: Vec<f64>,
    noise_proj: Vec<f64>,
    scale: f64,
}

impl FlipSampler {
    pub fn new<R: Rng + ?Sized>(basis: &TokenBasis, tau: f64, samples: usize, rng: &mut R) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature {tau}")));
        }
        let k = basis.num_classes();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = dot(basis.vector(i), basis.vector(j));
            }
        }
        let mut eps = vec![0.0; basis.dim()];
        let mut noise_proj = vec![0.0; samples * k];
        for s in 0..samples {
            eps.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
            basis.scores(&eps, &mut noise_proj[s * k..(s + 1) * k]);
        }
        Ok(Self {
            classes: k,
            gram,
            noise_proj,
            scale: 1.0 / tau,
        })
    }

    pub fn samples(&self) -> usize {
        self.noise_proj.len() / self.classes
    }

    fn logits(&self, s: usize, alpha_bar: f64, out: &mut [f64]) -> usize {
        let k = self.classes;
        let i = s % k;
        let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).max(0.0).sqrt());
        let g = &self.gram[i * k..(i + 1) * k];
        let e = &self.noise_proj[s * k..(s + 1) * k];
        for j in 0..k {
            out[j] = a * g[j] + b * e[j];
        }
        i
    }

    /// `1 − E[softmax_i((1/τ)⟨h0^{(j)}, h_t^{(i)}⟩)]`.
    pub fn p_flip(&self, alpha_bar: f64) -> Estimate {
        let mut buf = vec![0.0; self.classes];
        let vals: Vec<f64> = (0..self.samples())
            .map(|s| {
                let i = self.logits(s, alpha_bar, &mut buf);
                softmax_in_place(&mut buf, self.scale);
                1.0 - buf[i]
            })
            .collect();
        Estimate::from_samples(&vals)
    }

    /// Point estimate only, without the allocation for the standard error.
    pub fn p_flip_mean(&self, alpha_bar: f64) -> f64 {
        let mut buf = vec![0.0; self.classes];
        let mut total = 0.0;
        for s in 0..self.samples() {
            let i = self.logits(s, alpha_bar, &mut buf);
            softmax_in_place(&mut buf, self.scale);
            total += 1.0 - buf[i];
        }
        total / self.samples() as f64
    }

    /// Hard-decode class counts for samples starting in class `start`
    /// (rows: start class, columns: decoded class), flattened `N × N`.
    pub fn decode_counts(&self, alpha_bar: f64) -> Vec<usize> {
        let k = self.classes;
        let mut buf = vec![0.0; k];
        let mut counts = vec![0usize; k * k];
        for s in 0..self.samples() {
            let i = self.logits(s, alpha_bar, &mut buf);
            let j = argmax(&buf);
            counts[i * k + j] += 1;
        }
        counts
    }

    /// Fraction of samples whose hard decode differs from the start class.
    pub fn hamming(&self, alpha_bar: f64) -> Estimate {
        let mut buf = vec![0.0; self.classes];
        let vals: Vec<f64> = (0..self.samples())
            .map(|s| {
                let i = self.logits(s, alpha_bar, &mut buf);
                (argmax(&buf) != i) as u8 as f64
            })
            .collect();
        Estimate::from_samples(&vals)
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

/// Monte Carlo flip probability at diffusion time `t`.
pub fn p_flip<R: Rng + ?Sized>(
    t: f64,
    basis: &TokenBasis,
    schedule: &NoiseSchedule,
    tau: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let sampler = FlipSampler::new(basis, tau, samples, rng)?;
    Ok(sampler.p_flip(schedule.alpha_bar_at(t)))
}

/// One `(t, value, stderr)` row per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Curve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value,stderr")?;
        for i in 0..self.t.len() {
            writeln!(w, "{},{},{}", self.t[i], self.value[i], self.stderr[i])?;
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidParameter(format!("grid time {t} outside [0, 1]")));
    }
    Ok(())
}

/// Average Hamming distance between start token and hard decode over time.
pub fn hamming_curve<R: Rng + ?Sized>(
    basis: &TokenBasis,
    schedule: &NoiseSchedule,
    grid: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Curve> {
    check_grid(grid)?;
    let sampler = FlipSampler::new(basis, default_temperature(basis.dim()), samples, rng)?;
    let est: Vec<Estimate> = grid.iter().map(|&t| sampler.hamming(schedule.alpha_bar_at(t))).collect();
    Ok(Curve {
        t: grid.to_vec(),
        value: est.iter().map(|e| e.mean).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
    })
}

/// `1 − cos((λ − λ̂)π)`.
pub fn circular_loss(lambda: f64, lambda_hat: f64) -> f64 {
    1.0 - ((lambda - lambda_hat) * PI).cos()
}

/// Parameter decoding error under the forward process, for uniform λ.
pub fn circular_loss_curve<R: Rng + ?Sized>(
    basis: &ParamBasis,
    schedule: &NoiseSchedule,
    grid: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Curve> {
    check_grid(grid)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let d = basis.dim();
    let mut w = vec![0.0; d];
    let mut curve = Curve {
        t: grid.to_vec(),
        value: Vec::with_capacity(grid.len()),
        stderr: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let ab = schedule.alpha_bar_at(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        let mut vals = Vec::with_capacity(samples);
        while vals.len() < samples {
            let lam = rng.random_range(-1.0..1.0);
            basis.encode(lam, &mut w);
            for x in w.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *x = a * *x + b * e;
            }
            if let Ok(hat) = basis.decode(&w) {
                vals.push(circular_loss(lam, hat));
            }
        }
        let e = Estimate::from_samples(&vals);
        curve.value.push(e.mean);
        curve.stderr.push(e.stderr);
    }
    Ok(curve)
}
