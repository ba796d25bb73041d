use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ToyDenoiser;
use crate::diffusion::{noised, standard_normal, velocity, Condition, Denoiser, DenoiserInput, Schedules};
use crate::error::{Error, Result};
use crate::schedule::{weight_h, weight_w, HammingTarget};

/// One clean training pair: embedded circuit and its condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub h0: Vec<f64>,
    pub w0: Vec<f64>,
    pub cond: Condition,
}

/// Schedules plus what the two loss weights need.
#[derive(Debug, Clone)]
pub struct LossWeights {
    pub schedules: Schedules,
    pub target: HammingTarget,
    pub d_w: usize,
}

impl LossWeights {
    pub fn omega_h(&self, t: f64) -> f64 {
        weight_h(&self.schedules.h, &self.target, t)
    }

    pub fn omega_w(&self, t_tilde: f64) -> f64 {
        weight_w(&self.schedules.w, self.d_w, t_tilde)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDraw {
    pub t: Vec<f64>,
    pub t_tilde: Vec<f64>,
    /// False when the `t̃` bins were left aligned with the `t` bins.
    pub shuffled: bool,
}

/// Stratified times: `t_i, t̃_i ~ U[(i−1)/m, i/m]`. The `t̃` bins are
/// permuted across the batch except with probability `no_shuffle`.
pub fn sample_times<R: Rng + ?Sized>(m: usize, no_shuffle: f64, rng: &mut R) -> TimeDraw {
    let draw = |rng: &mut R| -> Vec<f64> {
        (0..m)
            .map(|i| ((i as f64 + rng.random::<f64>()) / m as f64).min(1.0))
            .collect()
    };
    let t = draw(rng);
    let mut t_tilde = draw(rng);
    let shuffled = !rng.random_bool(no_shuffle.clamp(0.0, 1.0));
    if shuffled {
        t_tilde.shuffle(rng);
    }
    TimeDraw { t, t_tilde, shuffled }
}

/// A fully drawn batch: noisy inputs, velocity targets and loss weights.
#[derive(Debug, Clone)]
pub struct PreparedBatch {
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub t: Vec<f64>,
    pub t_tilde: Vec<f64>,
    pub conds: Vec<Condition>,
    pub target_h: Vec<f64>,
    pub target_w: Vec<f64>,
    pub omega_h: Vec<f64>,
    pub omega_w: Vec<f64>,
    /// Rows whose condition was replaced by `φ`.
    pub dropped: usize,
    pub shuffled: bool,
}

impl PreparedBatch {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn as_input<'a>(&'a self, conds: &'a [&'a Condition]) -> DenoiserInput<'a> {
        DenoiserInput {
            h: &self.h,
            w: &self.w,
            t: &self.t,
            t_tilde: &self.t_tilde,
            cond: conds,
        }
    }
}

pub fn prepare_batch<R: Rng + ?Sized>(
    examples: &[&TrainExample],
    weights: &LossWeights,
    cfg_drop: f64,
    no_shuffle: f64,
    rng: &mut R,
) -> PreparedBatch {
    let m = examples.len();
    let times = sample_times(m, no_shuffle, rng);
    let mut b = PreparedBatch {
        h: Vec::new(),
        w: Vec::new(),
        t: times.t,
        t_tilde: times.t_tilde,
        conds: Vec::with_capacity(m),
        target_h: Vec::new(),
        target_w: Vec::new(),
        omega_h: Vec::with_capacity(m),
        omega_w: Vec::with_capacity(m),
        dropped: 0,
        shuffled: times.shuffled,
    };
    for (i, ex) in examples.iter().enumerate() {
        let (t, tt) = (b.t[i], b.t_tilde[i]);
        let (ab_h, ab_w) = (weights.schedules.h.alpha_bar_at(t), weights.schedules.w.alpha_bar_at(tt));
        let eps_h = standard_normal(ex.h0.len(), rng);
        let eps_w = standard_normal(ex.w0.len(), rng);
        b.h.extend(noised(&ex.h0, &eps_h, ab_h));
        b.w.extend(noised(&ex.w0, &eps_w, ab_w));
        b.target_h.extend(velocity(&ex.h0, &eps_h, ab_h));
        b.target_w.extend(velocity(&ex.w0, &eps_w, ab_w));
        b.omega_h.push(weights.omega_h(t));
        b.omega_w.push(weights.omega_w(tt));
        if rng.random_bool(cfg_drop.clamp(0.0, 1.0)) {
            b.conds.push(Condition::Empty);
            b.dropped += 1;
        } else {
            b.conds.push(ex.cond.clone());
        }
    }
    b
}

fn per_row_losses(batch: &PreparedBatch, vh: &[f64], vw: &[f64]) -> Result<Vec<f64>> {
    let m = batch.len();
    let (hl, wl) = (vh.len() / m, vw.len() / m);
    (0..m)
        .map(|r| {
            let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            let lh = sq(&vh[r * hl..(r + 1) * hl], &batch.target_h[r * hl..(r + 1) * hl]);
            let lw = sq(&vw[r * wl..(r + 1) * wl], &batch.target_w[r * wl..(r + 1) * wl]);
            let l = batch.omega_h[r] * lh + batch.omega_w[r] * lw;
            if l.is_finite() {
                Ok(l)
            } else {
                Err(Error::NonFiniteLoss { index: r })
            }
        })
        .collect()
}

/// `(1/m) Σ_b ω_h(t_b)‖v̂_h − v_h‖² + ω_w(t̃_b)‖v̂_w − v_w‖²` for any denoiser.
pub fn batch_loss(den: &dyn Denoiser, batch: &PreparedBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let conds: Vec<&Condition> = batch.conds.iter().collect();
    let (vh, vw) = den.predict(&batch.as_input(&conds));
    let losses = per_row_losses(batch, &vh, &vw)?;
    Ok(losses.iter().sum::<f64>() / batch.len() as f64)
}

/// Loss and its exact gradient with respect to every model parameter.
pub fn loss_and_grad(model: &ToyDenoiser, batch: &PreparedBatch) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let conds: Vec<&Condition> = batch.conds.iter().collect();
    let inp = model.inputs(&batch.as_input(&conds));
    let cache = model.forward(&inp);
    let hl = model.geometry.h_len();
    let (vh, vw) = super::split_output(&cache.out, hl);
    let losses = per_row_losses(batch, &vh, &vw)?;
    let m = batch.len();
    let d = cache.out.ncols();
    let wl = d - hl;
    let scale = 2.0 / m as f64;
    let mut d_out = Array2::zeros((m, d));
    for r in 0..m {
        let mut row = d_out.row_mut(r);
        let row = row.as_slice_mut().unwrap();
        for j in 0..hl {
            row[j] = scale * batch.omega_h[r] * (vh[r * hl + j] - batch.target_h[r * hl + j]);
        }
        for j in 0..wl {
            row[hl + j] = scale * batch.omega_w[r] * (vw[r * wl + j] - batch.target_w[r * wl + j]);
        }
    }
    let grad = model.backward(&inp, &cache, &d_out);
    Ok((losses.iter().sum::<f64>() / m as f64, grad))
}

/// Draws times, noise and condition dropout, then evaluates the loss and
/// its gradient.
pub fn loss_batch<R: Rng + ?Sized>(
    model: &ToyDenoiser,
    examples: &[&TrainExample],
    weights: &LossWeights,
    cfg_drop: f64,
    no_shuffle: f64,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let batch = prepare_batch(examples, weights, cfg_drop, no_shuffle, rng);
    loss_and_grad(model, &batch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// One-cycle learning rate: cosine warm-up from `peak/div_start` to `peak`,
/// then cosine decay to `peak/div_final`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneCycle {
    pub peak: f64,
    pub total: usize,
    pub warmup_frac: f64,
    pub div_start: f64,
    pub div_final: f64,
}

impl OneCycle {
    pub fn lr(&self, step: usize) -> f64 {
        let warm = ((self.total as f64 * self.warmup_frac).round() as usize).max(1);
        let cos_interp = |from: f64, to: f64, frac: f64| to + (from - to) * 0.5 * (1.0 + (PI * frac).cos());
        if step < warm {
            cos_interp(self.peak / self.div_start, self.peak, step as f64 / warm as f64)
        } else {
            let rest = (self.total.saturating_sub(warm)).max(1);
            let frac = ((step - warm) as f64 / rest as f64).min(1.0);
            cos_interp(self.peak, self.peak / self.div_final, frac)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch: usize,
    pub steps: usize,
    pub peak_lr: f64,
    pub warmup_frac: f64,
    pub cfg_drop: f64,
    pub no_shuffle: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch: 64,
            steps: 2000,
            peak_lr: 1e-3,
            warmup_frac: 0.25,
            cfg_drop: 0.10,
            no_shuffle: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("cfg_drop", self.cfg_drop), ("no_shuffle", self.no_shuffle)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} is not a probability")));
            }
        }
        if self.batch == 0 || self.steps == 0 || !(self.peak_lr > 0.0) {
            return Err(Error::InvalidParameter("batch, steps and peak_lr must be positive".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> OneCycle {
        OneCycle {
            peak: self.peak_lr,
            total: self.steps,
            warmup_frac: self.warmup_frac,
            div_start: 25.0,
            div_final: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub trace: Vec<TraceRow>,
    /// Conditions replaced by `φ`, out of `rows_seen`.
    pub dropped: usize,
    pub rows_seen: usize,
    pub unshuffled_batches: usize,
}

impl TrainReport {
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,loss,lr")?;
        for r in &self.trace {
            writeln!(w, "{},{},{}", r.step, r.loss, r.lr)?;
        }
        Ok(())
    }
}

/// Adam on the weighted velocity loss with one-cycle learning rate.
///
/// Examples are visited in reshuffled epochs. A non-finite loss or
/// parameter aborts with the model as it was before the failing step.
pub fn train(
    model: &mut ToyDenoiser,
    data: &[TrainExample],
    weights: &LossWeights,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.num_params());
    let sched = cfg.schedule();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut report = TrainReport {
        trace: Vec::with_capacity(cfg.steps),
        dropped: 0,
        rows_seen: 0,
        unshuffled_batches: 0,
    };
    for step in 0..cfg.steps {
        let mut picks = Vec::with_capacity(cfg.batch);
        while picks.len() < cfg.batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            picks.push(&data[order[cursor]]);
            cursor += 1;
        }
        let batch = prepare_batch(&picks, weights, cfg.cfg_drop, cfg.no_shuffle, &mut rng);
        let diverged = |m: &ToyDenoiser| Error::Diverged {
            step,
            last_good: Box::new(m.clone()),
        };
        let (loss, grad) = match loss_and_grad(model, &batch) {
            Ok(v) => v,
            Err(Error::NonFiniteLoss { .. }) => return Err(diverged(model)),
            Err(e) => return Err(e),
        };
        let lr = sched.lr(step);
        let before = model.params().to_vec();
        adam.update(model.params_mut(), &grad, lr);
        if !model.all_finite() {
            model.params_mut().copy_from_slice(&before);
            return Err(diverged(model));
        }
        report.dropped += batch.dropped;
        report.rows_seen += batch.len();
        report.unshuffled_batches += (!batch.shuffled) as usize;
        report.trace.push(TraceRow { step, loss, lr });
    }
    Ok(report)
}
