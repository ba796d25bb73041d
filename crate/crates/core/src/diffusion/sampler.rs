use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    guided_velocity_batch, posterior_draw, standard_normal, x_from_velocity, Condition, Denoiser, DenoiserInput,
    DualLatent, Guidance, Schedules,
};
use crate::circuit::{detokenize, Circuit};
use crate::embed::{CircuitLatent, EmbeddingSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Both modes advance together with `t = t̃`.
    Joint,
    /// Tokens first (parameters held at pure noise), then parameters given
    /// the clean tokens.
    Sequential,
    /// Parameters for a given token latent.
    SingleWGivenH,
    /// Tokens alone under the empty condition.
    UnconditionalH,
    /// Parameters alone under the empty condition.
    UnconditionalW,
}

impl SampleMode {
    pub fn name(self) -> &'static str {
        match self {
            SampleMode::Joint => "joint",
            SampleMode::Sequential => "sequential",
            SampleMode::SingleWGivenH => "single_w_given_h",
            SampleMode::UnconditionalH => "unconditional_h",
            SampleMode::UnconditionalW => "unconditional_w",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            SampleMode::Joint,
            SampleMode::Sequential,
            SampleMode::SingleWGivenH,
            SampleMode::UnconditionalH,
            SampleMode::UnconditionalW,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub mode: SampleMode,
    pub steps: usize,
    pub guidance: Guidance,
    /// Draw new stand-in noise for the dropped mode at every step rather
    /// than once per chain.
    pub resample_cross_noise: bool,
    pub record_trajectory: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            mode: SampleMode::Joint,
            steps: 100,
            guidance: Guidance::default(),
            resample_cross_noise: true,
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub latent: CircuitLatent,
    /// Latents before each step and the final one, when recorded.
    pub trajectory: Vec<DualLatent>,
}

/// Chain `k` of a run seeded with `seed`: its own ChaCha stream.
pub fn chain_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Active,
    Noise,
    Clean,
}

struct Phase {
    h: Role,
    w: Role,
    conditional: bool,
}

/// Runs one ancestral chain per entry of `conds`, all batched through the
/// denoiser. Chain `k` draws from `chain_rng(seed, k)`.
pub fn sample(
    den: &dyn Denoiser,
    schedules: &Schedules,
    cfg: &SampleConfig,
    conds: &[Condition],
    fixed_h0: Option<&[Vec<f64>]>,
    seed: u64,
) -> Result<Vec<SampleOutput>> {
    if cfg.steps == 0 {
        return Err(Error::InvalidParameter("sampler needs at least one step".into()));
    }
    let geo = den.geometry();
    let (hl, wl) = (geo.h_len(), geo.w_len());
    let b = conds.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..b as u64).map(|k| chain_rng(seed, k)).collect();

    let mut hs: Vec<Vec<f64>> = rngs.iter_mut().map(|r| standard_normal(hl, r)).collect();
    let mut ws: Vec<Vec<f64>> = rngs.iter_mut().map(|r| standard_normal(wl, r)).collect();

    let phases: Vec<Phase> = match cfg.mode {
        SampleMode::Joint => vec![Phase {
            h: Role::Active,
            w: Role::Active,
            conditional: true,
        }],
        SampleMode::Sequential => vec![
            Phase {
                h: Role::Active,
                w: Role::Noise,
                conditional: true,
            },
            Phase {
                h: Role::Clean,
                w: Role::Active,
                conditional: true,
            },
        ],
        SampleMode::SingleWGivenH => {
            let h0 = fixed_h0.ok_or_else(|| Error::InvalidParameter("single_w_given_h needs fixed h0".into()))?;
            if h0.len() != b || h0.iter().any(|h| h.len() != hl) {
                return Err(Error::DimensionMismatch("fixed h0 does not match chains/geometry".into()));
            }
            hs = h0.to_vec();
            vec![Phase {
                h: Role::Clean,
                w: Role::Active,
                conditional: true,
            }]
        }
        SampleMode::UnconditionalH => vec![Phase {
            h: Role::Active,
            w: Role::Noise,
            conditional: false,
        }],
        SampleMode::UnconditionalW => vec![Phase {
            h: Role::Noise,
            w: Role::Active,
            conditional: false,
        }],
    };

    let empty = Condition::Empty;
    let mut traj: Vec<Vec<DualLatent>> = vec![Vec::new(); b];
    for phase in &phases {
        let conds_used: Vec<&Condition> = conds
            .iter()
            .map(|c| if phase.conditional { c } else { &empty })
            .collect();
        let mut eps_h: Vec<Vec<f64>> = Vec::new();
        let mut eps_w: Vec<Vec<f64>> = Vec::new();
        for step in 0..cfg.steps {
            let t = 1.0 - step as f64 / cfg.steps as f64;
            let s = 1.0 - (step + 1) as f64 / cfg.steps as f64;
            if step == 0 || cfg.resample_cross_noise {
                eps_h = rngs.iter_mut().map(|r| standard_normal(hl, r)).collect();
                eps_w = rngs.iter_mut().map(|r| standard_normal(wl, r)).collect();
            }
            // Frozen-noise modes sit at time 1 and reuse the stand-in noise.
            if phase.h == Role::Noise {
                hs.clone_from(&eps_h);
            }
            if phase.w == Role::Noise {
                ws.clone_from(&eps_w);
            }
            let time_of = |r: Role| match r {
                Role::Active => t,
                Role::Noise => 1.0,
                Role::Clean => 0.0,
            };
            let (th, tw) = (time_of(phase.h), time_of(phase.w));
            if cfg.record_trajectory {
                for k in 0..b {
                    traj[k].push(DualLatent {
                        h: hs[k].clone(),
                        w: ws[k].clone(),
                        t: th,
                        t_tilde: tw,
                    });
                }
            }

            let flat_h: Vec<f64> = hs.concat();
            let flat_w: Vec<f64> = ws.concat();
            let tv = vec![th; b];
            let ttv = vec![tw; b];
            let (vh, vw) = if !phase.conditional || cfg.guidance.is_conditional() {
                den.predict(&DenoiserInput {
                    h: &flat_h,
                    w: &flat_w,
                    t: &tv,
                    t_tilde: &ttv,
                    cond: &conds_used,
                })
            } else {
                guided_velocity_batch(
                    den,
                    &flat_h,
                    &flat_w,
                    &tv,
                    &ttv,
                    &conds_used,
                    &eps_h.concat(),
                    &eps_w.concat(),
                    &cfg.guidance,
                )
            };

            let last = step + 1 == cfg.steps;
            for k in 0..b {
                if phase.h == Role::Active {
                    let ab_t = schedules.h.alpha_bar_at(t);
                    let x_hat = x_from_velocity(&hs[k], &vh[k * hl..(k + 1) * hl], ab_t);
                    hs[k] = if last {
                        x_hat
                    } else {
                        posterior_draw(&hs[k], &x_hat, schedules.h.alpha_bar_at(s), ab_t, &mut rngs[k])
                    };
                }
                if phase.w == Role::Active {
                    let ab_t = schedules.w.alpha_bar_at(t);
                    let x_hat = x_from_velocity(&ws[k], &vw[k * wl..(k + 1) * wl], ab_t);
                    ws[k] = if last {
                        x_hat
                    } else {
                        posterior_draw(&ws[k], &x_hat, schedules.w.alpha_bar_at(s), ab_t, &mut rngs[k])
                    };
                }
            }
        }
    }

    Ok((0..b)
        .map(|k| {
            let mut trajectory = std::mem::take(&mut traj[k]);
            if cfg.record_trajectory {
                trajectory.push(DualLatent {
                    h: hs[k].clone(),
                    w: ws[k].clone(),
                    t: 0.0,
                    t_tilde: 0.0,
                });
            }
            SampleOutput {
                latent: CircuitLatent {
                    num_qubits: geo.num_qubits,
                    positions: geo.positions,
                    h: std::mem::take(&mut hs[k]),
                    w: std::mem::take(&mut ws[k]),
                },
                trajectory,
            }
        })
        .collect())
}

/// Hard-decodes a sampled latent and converts it back to a circuit.
pub fn decode_sample(space: &EmbeddingSpace, latent: &CircuitLatent) -> Result<Circuit> {
    detokenize(&space.decode(latent)?, space.gate_set())
}
