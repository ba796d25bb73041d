//! Noise schedules, signal-to-noise ratios and loss weights.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{default_temperature, FlipSampler, TokenBasis};
use crate::error::{Error, Result};

pub const DEFAULT_STEPS: usize = 1000;

/// Upper clamp on learned `ᾱ(0)` so the SNR stays finite.
pub const LEARNED_ALPHA_BAR_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedKind {
    LinearBeta,
    CosineAlpha,
    CosineAlpha2,
}

impl FixedKind {
    pub fn name(self) -> &'static str {
        match self {
            FixedKind::LinearBeta => "linear_beta",
            FixedKind::CosineAlpha => "cosine_alpha",
            FixedKind::CosineAlpha2 => "cosine_alpha2",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [FixedKind::LinearBeta, FixedKind::CosineAlpha, FixedKind::CosineAlpha2]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// `ᾱ` on the grid `t_k = k/T`, `k = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alpha_bar: Vec<f64>,
    label: String,
}

pub const LINEAR_BETA_0: f64 = 1e-4;
pub const LINEAR_BETA_1: f64 = 0.02;

/// `β_k = (1 − t)β0 + tβ1` at `t = (k − 1)/(T − 1)` for step `k = 1..=T`, so
/// the first and last steps use exactly `β0` and `β1`.
pub fn linear_betas(steps: usize) -> Vec<f64> {
    (1..=steps)
        .map(|k| {
            let t = if steps == 1 { 1.0 } else { (k - 1) as f64 / (steps - 1) as f64 };
            (1.0 - t) * LINEAR_BETA_0 + t * LINEAR_BETA_1
        })
        .collect()
}

pub fn fixed_schedule(kind: FixedKind, steps: usize) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::InvalidParameter("schedule needs T ≥ 1".into()));
    }
    let grid = (0..=steps).map(|k| k as f64 / steps as f64);
    let alpha_bar: Vec<f64> = match kind {
        FixedKind::LinearBeta => {
            let mut acc = 1.0;
            std::iter::once(1.0)
                .chain(linear_betas(steps).into_iter().map(|b| {
                    acc *= 1.0 - b;
                    acc
                }))
                .collect()
        }
        FixedKind::CosineAlpha => grid.map(|t| (t * FRAC_PI_2).cos().max(0.0)).collect(),
        FixedKind::CosineAlpha2 => grid.map(|t| (t * FRAC_PI_2).cos().powi(2)).collect(),
    };
    let mut alpha_bar = alpha_bar;
    // cos(π/2) is 6e-17, not 0
    if kind != FixedKind::LinearBeta {
        alpha_bar[steps] = 0.0;
    }
    NoiseSchedule::new(alpha_bar, kind.name())
}

impl NoiseSchedule {
    pub fn new(alpha_bar: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if alpha_bar.len() < 2 {
            return Err(Error::InvalidParameter("schedule needs at least two entries".into()));
        }
        for (k, &a) in alpha_bar.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!("ᾱ[{k}] = {a} outside [0, 1]")));
            }
            if k > 0 && a > alpha_bar[k - 1] {
                return Err(Error::InvalidParameter(format!("ᾱ increases at index {k}")));
            }
        }
        Ok(Self {
            alpha_bar,
            label: label.into(),
        })
    }

    pub fn steps(&self) -> usize {
        self.alpha_bar.len() - 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alpha_bar(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// Per-step `α_k = ᾱ_k / ᾱ_{k−1}` (0 once `ᾱ` reaches 0), so that
    /// `ᾱ_k = Π α`.
    pub fn alphas(&self) -> Vec<f64> {
        self.alpha_bar
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// `ᾱ(t)` for continuous `t ∈ [0, 1]`, linear between grid points.
    pub fn alpha_bar_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let x = t * self.steps() as f64;
        let k = (x.floor() as usize).min(self.steps() - 1);
        let frac = x - k as f64;
        let (a, b) = (self.alpha_bar[k], self.alpha_bar[k + 1]);
        a + (b - a) * frac
    }

    /// `ᾱ/(1 − ᾱ)`; `+∞` where `ᾱ = 1`.
    pub fn snr(&self, t: f64) -> f64 {
        snr_of(self.alpha_bar_at(t))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schedule {}", self.label)?;
        writeln!(w, "index,alpha_bar")?;
        for (k, a) in self.alpha_bar.iter().enumerate() {
            writeln!(w, "{k},{a:e}")?;
        }
        Ok(())
    }

    /// Reads `index,alpha_bar` rows. `#` lines are comments; a
    /// `# schedule <label>` comment sets the label.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut label = String::from("file");
        let mut values = Vec::new();
        let mut header = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(l) = c.trim().strip_prefix("schedule ") {
                    label = l.trim().to_string();
                }
                continue;
            }
            if !header {
                if line != "index,alpha_bar" {
                    return Err(Error::format(format!("line {}: expected header index,alpha_bar", i + 1)));
                }
                header = true;
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| Error::format(format!("line {}: expected two fields", i + 1)))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::format(format!("line {}: bad index", i + 1)))?;
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::format(format!("line {}: bad value", i + 1)))?;
            if idx != values.len() {
                return Err(Error::format(format!("line {}: index {idx} out of sequence", i + 1)));
            }
            values.push(val);
        }
        Self::new(values, label).map_err(|e| Error::format(e.to_string()))
    }
}

pub fn snr_of(alpha_bar: f64) -> f64 {
    if alpha_bar >= 1.0 {
        f64::INFINITY
    } else {
        alpha_bar / (1.0 - alpha_bar)
    }
}

/// `SNR_λ = SNR_w · π² · d_w`: the Fisher-information SNR of the decoded
/// parameter angle.
pub fn snr_lambda(schedule_w: &NoiseSchedule, t: f64, d_w: usize) -> f64 {
    schedule_w.snr(t) * PI * PI * d_w as f64
}

/// `sigmoid(log x)` written as `x/(1 + x)`, exact at 0 and `∞`.
pub fn sigmoid_log(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetShape {
    Linear,
    Sin,
    Sin2,
}

/// Desired flip-probability profile `f_target(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HammingTarget {
    pub shape: TargetShape,
    pub classes: usize,
}

impl HammingTarget {
    pub fn new(shape: TargetShape, classes: usize) -> Self {
        Self { shape, classes }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let top = 1.0 - 1.0 / self.classes as f64;
        let s = match self.shape {
            TargetShape::Linear => t,
            TargetShape::Sin => (t * FRAC_PI_2).sin(),
            TargetShape::Sin2 => (t * FRAC_PI_2).sin().powi(2),
        };
        top * s
    }
}

/// `(f(1) − f(t))/f(t)`; `+∞` at `f(t) = 0`.
pub fn snr_discrete(target: &HammingTarget, t: f64) -> f64 {
    let ft = target.eval(t);
    if ft <= 0.0 {
        return f64::INFINITY;
    }
    ((target.eval(1.0) - ft) / ft).max(0.0)
}

/// `ω_h(t) = (1 − ᾱ_h(t))·sigmoid(log SNR_discrete(t))`.
pub fn weight_h(schedule_h: &NoiseSchedule, target: &HammingTarget, t: f64) -> f64 {
    (1.0 - schedule_h.alpha_bar_at(t)) * sigmoid_log(snr_discrete(target, t))
}

/// `ω_w(t) = (1 − ᾱ_w(t))·sigmoid(log SNR_λ(t))`.
pub fn weight_w(schedule_w: &NoiseSchedule, d_w: usize, t: f64) -> f64 {
    (1.0 - schedule_w.alpha_bar_at(t)) * sigmoid_log(snr_lambda(schedule_w, t, d_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCurve {
    pub mode: WeightMode,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl WeightCurve {
    pub fn discrete(schedule_h: &NoiseSchedule, target: &HammingTarget, grid: &[f64]) -> Self {
        WeightCurve {
            mode: WeightMode::Discrete,
            t: grid.to_vec(),
            values: grid.iter().map(|&t| weight_h(schedule_h, target, t)).collect(),
        }
    }

    pub fn continuous(schedule_w: &NoiseSchedule, d_w: usize, grid: &[f64]) -> Self {
        WeightCurve {
            mode: WeightMode::Continuous,
            t: grid.to_vec(),
            values: grid.iter().map(|&t| weight_w(schedule_w, d_w, t)).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        self.t
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Areas under both weight curves and `area_h / area_w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBalance {
    pub area_h: f64,
    pub area_w: f64,
    pub ratio: f64,
    /// Set when the ratio falls outside `[0.8, 1.25]`.
    pub flagged: bool,
}

pub fn area_balance(w_h: &WeightCurve, w_w: &WeightCurve) -> Result<AreaBalance> {
    if w_h.t != w_w.t {
        return Err(Error::DimensionMismatch("weight curves on different grids".into()));
    }
    let (area_h, area_w) = (w_h.area(), w_w.area());
    let ratio = area_h / area_w;
    Ok(AreaBalance {
        area_h,
        area_w,
        ratio,
        flagged: !(0.8..=1.25).contains(&ratio),
    })
}

pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| k as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub steps: usize,
    pub grid_points: usize,
    /// Monte Carlo samples per `p_flip` evaluation.
    pub samples: usize,
    pub tol: f64,
    pub temperature: Option<f64>,
    pub bisection_iters: usize,
    /// Each retry doubles the sample count.
    pub max_rounds: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            grid_points: 64,
            samples: 8192,
            tol: 0.02,
            temperature: None,
            bisection_iters: 48,
            max_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedSchedule {
    pub schedule: NoiseSchedule,
    pub grid: Vec<f64>,
    /// Verification estimates of `p_flip` on the grid, from fresh noise.
    pub p_flip: Vec<f64>,
    /// `max |p_flip − f_target|` over the grid.
    pub residual: f64,
    /// Mean of `(p_flip − f_target)²` over the grid.
    pub mse: f64,
}

/// Fits `ᾱ_h` so that the flip probability follows `target`.
///
/// Each grid time is fitted by bisection on `ᾱ` against a common-noise
/// Monte Carlo estimate (`p_flip` falls monotonically as `ᾱ` grows). The grid
/// values are then made monotone by isotonic regression, interpolated to all
/// `T` steps with a monotone cubic, and checked against fresh noise.
pub fn learn_discrete_schedule<R: Rng + ?Sized>(
    basis: &TokenBasis,
    target: HammingTarget,
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<LearnedSchedule> {
    let top = 1.0 - 1.0 / basis.num_classes() as f64;
    if target.classes != basis.num_classes() || (target.eval(1.0) - top).abs() > 1e-12 || target.eval(0.0) != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target must satisfy f(0) = 0 and f(1) = 1 − 1/N for N = {}",
            basis.num_classes()
        )));
    }
    if cfg.grid_points < 2 || cfg.steps == 0 || cfg.samples == 0 || cfg.max_rounds == 0 {
        return Err(Error::InvalidParameter("learner needs ≥ 2 grid points, T ≥ 1, samples ≥ 1".into()));
    }
    let tau = cfg.temperature.unwrap_or_else(|| default_temperature(basis.dim()));
    let grid = uniform_grid(cfg.grid_points);
    let mut best: Option<LearnedSchedule> = None;

    for round in 0..cfg.max_rounds {
        let samples = cfg.samples << round;
        let fit_seed: u64 = rng.random();
        let check_seed: u64 = rng.random();
        let sampler = FlipSampler::new(basis, tau, samples, &mut ChaCha8Rng::seed_from_u64(fit_seed))?;

        let raw: Vec<f64> = grid
            .iter()
            .map(|&t| bisect_alpha_bar(&sampler, target.eval(t), cfg.bisection_iters))
            .collect();
        let fitted = isotonic_decreasing(&raw);
        let mut dense = pchip_resample(&grid, &fitted, cfg.steps);
        dense[0] = dense[0].min(LEARNED_ALPHA_BAR_MAX);
        enforce_strictly_decreasing(&mut dense);
        let schedule = NoiseSchedule::new(dense, format!("learned-{}", shape_name(target.shape)))?;

        let check = FlipSampler::new(basis, tau, samples, &mut ChaCha8Rng::seed_from_u64(check_seed))?;
        let p: Vec<f64> = grid.iter().map(|&t| check.p_flip_mean(schedule.alpha_bar_at(t))).collect();
        let errs: Vec<f64> = grid.iter().zip(&p).map(|(&t, &pf)| pf - target.eval(t)).collect();
        let residual = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
        let candidate = LearnedSchedule {
            schedule,
            grid: grid.clone(),
            p_flip: p,
            residual,
            mse,
        };
        if residual <= cfg.tol {
            return Ok(candidate);
        }
        if best.as_ref().map_or(true, |b| residual < b.residual) {
            best = Some(candidate);
        }
    }
    Err(Error::NonConvergence {
        residual: best.map_or(f64::INFINITY, |b| b.residual),
    })
}

fn shape_name(s: TargetShape) -> &'static str {
    match s {
        TargetShape::Linear => "linear",
        TargetShape::Sin => "sin",
        TargetShape::Sin2 => "sin2",
    }
}

/// Largest-signal `ᾱ ∈ [0, 1]` whose estimated flip probability reaches `goal`.
fn bisect_alpha_bar(sampler: &FlipSampler, goal: f64, iters: usize) -> f64 {
    if sampler.p_flip_mean(1.0) >= goal {
        return 1.0;
    }
    if sampler.p_flip_mean(0.0) <= goal {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if sampler.p_flip_mean(mid) > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pool-adjacent-violators fit of a nonincreasing sequence (equal weights).
pub fn isotonic_decreasing(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m2 <= m1 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat(m).take(n))
        .collect()
}

/// Fritsch–Carlson monotone cubic through nonincreasing `(xs, ys)`, sampled
/// at `k/steps`.
pub fn pchip_resample(xs: &[f64], ys: &[f64], steps: usize) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            let (w1, w2) = (2.0 * h[i] + h[i - 1], h[i] + 2.0 * h[i - 1]);
            (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
        };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[i] / delta[i], m[i + 1] / delta[i]);
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * delta[i];
            m[i + 1] = tau * b * delta[i];
        }
    }
    let mut out: Vec<f64> = (0..=steps)
        .map(|k| {
            let x = k as f64 / steps as f64;
            let i = match xs.iter().rposition(|&xi| xi <= x) {
                Some(i) => i.min(n - 2),
                None => 0,
            };
            let s = (x - xs[i]) / h[i];
            let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2));
            let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
            (h00 * ys[i] + h10 * h[i] * m[i] + h01 * ys[i + 1] + h11 * h[i] * m[i + 1]).clamp(0.0, 1.0)
        })
        .collect();
    // rounding can lift a flat stretch by an ulp
    for k in 1..out.len() {
        out[k] = out[k].min(out[k - 1]);
    }
    out
}

/// Nudges plateaus so every step strictly decreases; the last entry may be 0.
fn enforce_strictly_decreasing(a: &mut [f64]) {
    const GAP: f64 = 1e-12;
    let last = a.len() - 1;
    for k in 0..last {
        a[k] = a[k].max((last - k) as f64 * GAP);
    }
    for k in 1..=last {
        if a[k] >= a[k - 1] {
            a[k] = a[k - 1] - GAP;
        }
    }
    a[last] = a[last].max(0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::build_token_basis;

    #[test]
    fn cosine_endpoints() {
        let s = fixed_schedule(FixedKind::CosineAlpha, 1000).unwrap();
        assert_eq!(s.alpha_bar()[0], 1.0);
        assert_eq!(s.alpha_bar()[1000], 0.0);
        let s2 = fixed_schedule(FixedKind::CosineAlpha2, 1000).unwrap();
        assert!((s2.alpha_bar_at(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn alphas_multiply_back() {
        let s = fixed_schedule(FixedKind::LinearBeta, 50).unwrap();
        let mut acc = 1.0;
        for (k, a) in s.alphas().iter().enumerate() {
            acc *= a;
            assert!((acc - s.alpha_bar()[k + 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn snr_values() {
        assert_eq!(snr_of(0.5), 1.0);
        assert_eq!(snr_of(1.0), f64::INFINITY);
        let b = -(PI * PI * 3.0).ln();
        assert!((b + 3.39).abs() < 0.005);
        let t = HammingTarget::new(TargetShape::Linear, 12);
        assert!((snr_discrete(&t, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(snr_discrete(&t, 1.0), 0.0);
        assert_eq!(snr_discrete(&t, 0.0), f64::INFINITY);
    }

    #[test]
    fn weight_limits() {
        let sh = fixed_schedule(FixedKind::CosineAlpha2, 1000).unwrap();
        let t = HammingTarget::new(TargetShape::Linear, 12);
        assert_eq!(weight_h(&sh, &t, 0.0), 0.0);
        assert_eq!(weight_h(&sh, &t, 1.0), 0.0);
        assert_eq!(weight_w(&sh, 3, 0.0), 0.0);
        assert_eq!(weight_w(&sh, 3, 1.0), 0.0);
        for k in 1..100 {
            let x = k as f64 / 100.0;
            let (a, b) = (weight_h(&sh, &t, x), weight_w(&sh, 3, x));
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn weight_w_midpoint() {
        // ᾱ chosen so that SNR_w = 1/(3π²)
        let snr = 1.0 / (3.0 * PI * PI);
        let ab = snr / (1.0 + snr);
        let s = NoiseSchedule::new(vec![1.0, ab, 0.0], "probe").unwrap();
        assert!((weight_w(&s, 3, 0.5) - (1.0 - ab) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn area_ratios() {
        let grid = uniform_grid(11);
        let a = WeightCurve {
            mode: WeightMode::Discrete,
            t: grid.clone(),
            values: grid.iter().map(|t| t * (1.0 - t)).collect(),
        };
        let mut b = a.clone();
        b.mode = WeightMode::Continuous;
        assert_eq!(area_balance(&a, &b).unwrap().ratio, 1.0);
        let mut c = a.clone();
        c.values.iter_mut().for_each(|v| *v *= 2.0);
        let r = area_balance(&c, &b).unwrap();
        assert!((r.ratio - 2.0).abs() < 1e-15 && r.flagged);
    }

    #[test]
    fn pava_and_pchip() {
        assert_eq!(isotonic_decreasing(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        let xs = uniform_grid(5);
        let ys = vec![1.0, 0.8, 0.8, 0.3, 0.0];
        let d = pchip_resample(&xs, &ys, 100);
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        assert!((d[25] - 0.8).abs() < 1e-12 && (d[100]).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let s = fixed_schedule(FixedKind::LinearBeta, 20).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = NoiseSchedule::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(NoiseSchedule::read_csv("index,alpha_bar\n0,1\n2,0.5\n".as_bytes()).is_err());
        assert!(NoiseSchedule::read_csv("index,alpha_bar\n0,0.5\n1,0.9\n".as_bytes()).is_err());
    }

    #[test]
    fn infeasible_target_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let basis = build_token_basis(12, 13, &mut rng).unwrap();
        let bad = HammingTarget::new(TargetShape::Linear, 5);
        assert!(learn_discrete_schedule(&basis, bad, &LearnConfig::default(), &mut rng).is_err());
    }
}
