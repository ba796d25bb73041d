//! Gaussian diffusion over the paired latents `(h, w)`.

mod sampler;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::GateKind;
use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;
use crate::sim::Unitary;

pub use sampler::{chain_rng, decode_sample, sample, SampleConfig, SampleMode, SampleOutput};

/// Shapes of one circuit latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub num_qubits: usize,
    pub positions: usize,
    pub d_h: usize,
    pub d_w: usize,
}

impl Geometry {
    pub fn h_len(&self) -> usize {
        self.num_qubits * self.positions * self.d_h
    }

    pub fn w_len(&self) -> usize {
        self.positions * self.d_w
    }

    /// Real features in a unitary condition, `2·4^n`.
    pub fn unitary_features(&self) -> usize {
        2 << (2 * self.num_qubits)
    }
}

/// External condition `c`, or the empty condition `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Empty,
    Given {
        /// Row-major interleaved `(re, im)` entries of the target unitary.
        unitary: Vec<f64>,
        gate_mask: [bool; 8],
    },
}

impl Condition {
    pub fn new(target: &Unitary, kinds: &[GateKind]) -> Self {
        let mut gate_mask = [false; 8];
        for k in kinds {
            gate_mask[k.index()] = true;
        }
        Condition::Given {
            unitary: target.features(),
            gate_mask,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Condition::Empty)
    }
}

/// Schedules for the discrete (`h`) and continuous (`w`) modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedules {
    pub h: NoiseSchedule,
    pub w: NoiseSchedule,
}

/// A batch of denoiser queries; row `b` of each slice belongs to query `b`.
#[derive(Debug, Clone, Copy)]
pub struct DenoiserInput<'a> {
    pub h: &'a [f64],
    pub w: &'a [f64],
    pub t: &'a [f64],
    pub t_tilde: &'a [f64],
    pub cond: &'a [&'a Condition],
}

impl DenoiserInput<'_> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `(h_t, w_t̃, t, t̃, c) → (v_h, v_w)`, evaluated row-wise over a batch.
pub trait Denoiser {
    fn geometry(&self) -> Geometry;

    /// Returns `(v_h, v_w)` stacked in the same row order as the input.
    fn predict(&self, input: &DenoiserInput<'_>) -> (Vec<f64>, Vec<f64>);
}

/// One noisy latent pair with its two diffusion times.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLatent {
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub t_tilde: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("diffusion time {t} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `z = √ᾱ x + √(1 − ᾱ) ε`.
pub fn noised(x0: &[f64], eps: &[f64], alpha_bar: f64) -> Vec<f64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect()
}

/// `v = √ᾱ ε − √(1 − ᾱ) x`.
pub fn velocity(x0: &[f64], eps: &[f64], alpha_bar: f64) -> Vec<f64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(x, e)| a * e - b * x).collect()
}

/// `x̂ = √ᾱ z − √(1 − ᾱ) v`.
pub fn x_from_velocity(z: &[f64], v: &[f64], alpha_bar: f64) -> Vec<f64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    z.iter().zip(v).map(|(z, v)| a * z - b * v).collect()
}

/// Draws `ε` and returns `(z_t, ε)`.
pub fn forward_sample<R: Rng + ?Sized>(
    x0: &[f64],
    schedule: &NoiseSchedule,
    t: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_time(t)?;
    let eps = standard_normal(x0.len(), rng);
    Ok((noised(x0, &eps, schedule.alpha_bar_at(t)), eps))
}

pub fn velocity_target(x0: &[f64], eps: &[f64], schedule: &NoiseSchedule, t: f64) -> Vec<f64> {
    velocity(x0, eps, schedule.alpha_bar_at(t))
}

pub fn x_from_v(z: &[f64], v: &[f64], schedule: &NoiseSchedule, t: f64) -> Vec<f64> {
    x_from_velocity(z, v, schedule.alpha_bar_at(t))
}

/// Mean coefficients and variance of `q(z_s | z_t, x)` for `ᾱ_s ≥ ᾱ_t`.
///
/// The step's `α_t = ᾱ_t/ᾱ_s` (taken as 0 when `ᾱ_s = 0`) and
/// `β_t = 1 − α_t`; returns `(c_x, c_z, var)` with mean `c_x·x + c_z·z_t`.
pub fn posterior_coefficients(alpha_bar_s: f64, alpha_bar_t: f64) -> (f64, f64, f64) {
    let alpha_t = if alpha_bar_s > 0.0 { alpha_bar_t / alpha_bar_s } else { 0.0 };
    let beta_t = 1.0 - alpha_t;
    let denom = 1.0 - alpha_bar_t;
    if denom <= 0.0 {
        // no noise at t: nothing to denoise
        return (1.0, 0.0, 0.0);
    }
    let c_x = alpha_bar_s.sqrt() * beta_t / denom;
    let c_z = alpha_t.sqrt() * (1.0 - alpha_bar_s) / denom;
    let var = ((1.0 - alpha_bar_s) / denom * beta_t).max(0.0);
    (c_x, c_z, var)
}

pub(crate) fn posterior_draw<R: Rng + ?Sized>(
    z_t: &[f64],
    x_hat: &[f64],
    alpha_bar_s: f64,
    alpha_bar_t: f64,
    rng: &mut R,
) -> Vec<f64> {
    let (c_x, c_z, var) = posterior_coefficients(alpha_bar_s, alpha_bar_t);
    let sd = var.sqrt();
    z_t.iter()
        .zip(x_hat)
        .map(|(z, x)| {
            let mean = c_x * x + c_z * z;
            if sd > 0.0 {
                let e: f64 = rng.sample(StandardNormal);
                mean + sd * e
            } else {
                mean
            }
        })
        .collect()
}

/// One ancestral step `z_t → z_s` from the Gaussian top-down posterior.
pub fn posterior_step<R: Rng + ?Sized>(
    z_t: &[f64],
    x_hat: &[f64],
    schedule: &NoiseSchedule,
    s: f64,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_time(s)?;
    check_time(t)?;
    if s >= t {
        return Err(Error::InvalidParameter(format!("posterior step needs s < t, got s={s}, t={t}")));
    }
    if z_t.len() != x_hat.len() {
        return Err(Error::DimensionMismatch("z_t and x̂ differ in length".into()));
    }
    Ok(posterior_draw(z_t, x_hat, schedule.alpha_bar_at(s), schedule.alpha_bar_at(t), rng))
}

/// Guidance scales: `γ` steers across modes, `λ` towards the condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guidance {
    pub gamma_h: f64,
    pub gamma_w: f64,
    pub lambda_h: f64,
    pub lambda_w: f64,
}

impl Default for Guidance {
    fn default() -> Self {
        Self {
            gamma_h: 0.3,
            gamma_w: 0.1,
            lambda_h: 1.0,
            lambda_w: 0.35,
        }
    }
}

impl Guidance {
    /// `γ = λ = 1`: the plain conditional prediction.
    pub fn conditional() -> Self {
        Self {
            gamma_h: 1.0,
            gamma_w: 1.0,
            lambda_h: 1.0,
            lambda_w: 1.0,
        }
    }

    pub fn is_conditional(&self) -> bool {
        *self == Self::conditional()
    }
}

/// `A + γ(B − A) + λ(C − B)`, arranged as `(1 − γ)A + (γ − λ)B + λC` so that
/// `γ = λ = 1` returns `C` bit for bit.
#[inline]
pub fn guidance_combine(a: f64, b: f64, c: f64, gamma: f64, lambda: f64) -> f64 {
    (1.0 - gamma) * a + (gamma - lambda) * b + lambda * c
}

/// Guided velocities for a batch of latent pairs.
///
/// Rows are `(h_b, w_b, t_b, t̃_b, c_b)`; `eps_h`/`eps_w` are the stand-ins
/// for the dropped mode at time 1. Four branches are evaluated in a single
/// denoiser call: `A_h = v(h, ε_w, t, 1, φ)`, `A_w = v(ε_h, w, 1, t̃, φ)`,
/// `B = v(h, w, t, t̃, φ)` and `C = v(h, w, t, t̃, c)`.
#[allow(clippy::too_many_arguments)]
pub fn guided_velocity_batch(
    den: &dyn Denoiser,
    h: &[f64],
    w: &[f64],
    t: &[f64],
    t_tilde: &[f64],
    cond: &[&Condition],
    eps_h: &[f64],
    eps_w: &[f64],
    g: &Guidance,
) -> (Vec<f64>, Vec<f64>) {
    let b = t.len();
    let geo = den.geometry();
    let (hl, wl) = (geo.h_len(), geo.w_len());
    let empty = Condition::Empty;

    let mut hs = Vec::with_capacity(4 * b * hl);
    let mut ws = Vec::with_capacity(4 * b * wl);
    let mut ts = Vec::with_capacity(4 * b);
    let mut tts = Vec::with_capacity(4 * b);
    let mut cs: Vec<&Condition> = Vec::with_capacity(4 * b);
    // A_h rows
    hs.extend_from_slice(h);
    ws.extend_from_slice(eps_w);
    ts.extend_from_slice(t);
    tts.extend(std::iter::repeat(1.0).take(b));
    cs.extend(std::iter::repeat(&empty).take(b));
    // A_w rows
    hs.extend_from_slice(eps_h);
    ws.extend_from_slice(w);
    ts.extend(std::iter::repeat(1.0).take(b));
    tts.extend_from_slice(t_tilde);
    cs.extend(std::iter::repeat(&empty).take(b));
    // B rows
    hs.extend_from_slice(h);
    ws.extend_from_slice(w);
    ts.extend_from_slice(t);
    tts.extend_from_slice(t_tilde);
    cs.extend(std::iter::repeat(&empty).take(b));
    // C rows
    hs.extend_from_slice(h);
    ws.extend_from_slice(w);
    ts.extend_from_slice(t);
    tts.extend_from_slice(t_tilde);
    cs.extend_from_slice(cond);

    let (vh, vw) = den.predict(&DenoiserInput {
        h: &hs,
        w: &ws,
        t: &ts,
        t_tilde: &tts,
        cond: &cs,
    });
    let (nh, nw) = (b * hl, b * wl);
    let out_h = (0..nh)
        .map(|i| guidance_combine(vh[i], vh[2 * nh + i], vh[3 * nh + i], g.gamma_h, g.lambda_h))
        .collect();
    let out_w = (0..nw)
        .map(|i| guidance_combine(vw[nw + i], vw[2 * nw + i], vw[3 * nw + i], g.gamma_w, g.lambda_w))
        .collect();
    (out_h, out_w)
}

/// Guided `(ṽ_h, ṽ_w)` for one latent, drawing fresh `ε_h, ε_w`.
pub fn guided_velocity<R: Rng + ?Sized>(
    den: &dyn Denoiser,
    lat: &DualLatent,
    c: &Condition,
    g: &Guidance,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let eps_h = standard_normal(lat.h.len(), rng);
    let eps_w = standard_normal(lat.w.len(), rng);
    guided_velocity_batch(den, &lat.h, &lat.w, &[lat.t], &[lat.t_tilde], &[c], &eps_h, &eps_w, g)
}

/// Unguided single evaluation `v(h, w, t, t̃, c)`.
pub fn predict_one(den: &dyn Denoiser, lat: &DualLatent, c: &Condition) -> (Vec<f64>, Vec<f64>) {
    den.predict(&DenoiserInput {
        h: &lat.h,
        w: &lat.w,
        t: &[lat.t],
        t_tilde: &[lat.t_tilde],
        cond: &[c],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{fixed_schedule, FixedKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn endpoints_of_forward_process() {
        let s = fixed_schedule(FixedKind::CosineAlpha2, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = standard_normal(10, &mut rng);
        let (z0, _) = forward_sample(&x, &s, 0.0, &mut rng).unwrap();
        assert_eq!(z0, x);
        let (z1, e1) = forward_sample(&x, &s, 1.0, &mut rng).unwrap();
        assert_eq!(z1, e1);
        assert!(forward_sample(&x, &s, 1.5, &mut rng).is_err());
    }

    #[test]
    fn velocity_round_trip() {
        let s = fixed_schedule(FixedKind::LinearBeta, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = standard_normal(50, &mut rng);
        for t in [0.0, 0.13, 0.5, 0.99, 1.0] {
            let (z, e) = forward_sample(&x, &s, t, &mut rng).unwrap();
            let v = velocity_target(&x, &e, &s, t);
            let back = x_from_v(&z, &v, &s, t);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let e = standard_normal(5, &mut rng);
        assert_eq!(velocity(&x[..5], &e, 1.0), e);
    }

    #[test]
    fn degenerate_posterior_returns_estimate() {
        let s = NoiseSchedule::new(vec![1.0, 0.6, 0.2], "probe").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = standard_normal(6, &mut rng);
        let x = standard_normal(6, &mut rng);
        assert_eq!(posterior_step(&z, &x, &s, 0.0, 0.5, &mut rng).unwrap(), x);
        assert!(posterior_step(&z, &x, &s, 0.5, 0.5, &mut rng).is_err());
    }

    #[test]
    fn combine_collapses_at_unit_scales() {
        for (a, b, c) in [(1.5, -0.25, 0.75), (f64::MAX / 4.0, 3.0, -1e-300)] {
            assert_eq!(guidance_combine(a, b, c, 1.0, 1.0), c);
        }
        assert_eq!(guidance_combine(2.0, 3.0, 5.0, 0.0, 0.0), 2.0);
    }
}
