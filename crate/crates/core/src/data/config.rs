use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{GateKind, GateSet};
use crate::denoiser::{ModelConfig, TrainConfig};
use crate::diffusion::{Guidance, SampleConfig, SampleMode, Schedules};
use crate::embed::{default_temperature, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::schedule::{
    fixed_schedule, learn_discrete_schedule, FixedKind, HammingTarget, LearnConfig, NoiseSchedule, TargetShape,
};

pub const CONFIG_VERSION: u32 = 1;

/// Run configuration, read from TOML. Every section has toy defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub circuits: CircuitsConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitsConfig {
    /// Inclusive qubit-count range.
    pub qubits: [usize; 2],
    /// Inclusive gate-count range.
    pub gates: [usize; 2],
    pub kinds: Vec<String>,
    pub max_positions: usize,
    /// Records to generate.
    pub count: usize,
    /// Extra parameter draws per parameterized ansatz.
    pub resample_k: usize,
    /// Test ansätze per gate count.
    pub test_quota: usize,
}

impl Default for CircuitsConfig {
    fn default() -> Self {
        Self {
            qubits: [2, 2],
            gates: [2, 4],
            kinds: vec!["h".into(), "cx".into(), "rx".into()],
            max_positions: 4,
            count: 5000,
            resample_k: 6,
            test_quota: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub d_h: usize,
    pub d_w: usize,
    /// Softmax temperature; `1/√d_h` when absent.
    pub temperature: Option<f64>,
    /// Seed of the random orthogonal bases.
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            d_h: 13,
            d_w: 3,
            temperature: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    /// `learned` or a fixed kind (`linear_beta`, `cosine_alpha`, `cosine_alpha2`).
    pub h: String,
    /// Hamming target of the learned schedule: `linear`, `sin` or `sin2`.
    pub target: String,
    /// Use a schedule CSV (as written by `learn-schedule`) instead.
    pub h_csv: Option<PathBuf>,
    pub w: String,
    pub learn_samples: usize,
    pub learn_tol: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            h: "learned".into(),
            target: "linear".into(),
            h_csv: None,
            w: "cosine_alpha2".into(),
            learn_samples: 8192,
            learn_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch: usize,
    pub steps: usize,
    pub peak_lr: f64,
    pub warmup_frac: f64,
    pub cfg_drop: f64,
    pub no_shuffle: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            batch: t.batch,
            steps: 30_000,
            peak_lr: t.peak_lr,
            warmup_frac: t.warmup_frac,
            cfg_drop: t.cfg_drop,
            no_shuffle: t.no_shuffle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub steps: usize,
    pub mode: String,
    pub gamma_h: f64,
    pub gamma_w: f64,
    pub lambda_h: f64,
    pub lambda_w: f64,
    pub resample_cross_noise: bool,
    pub samples_per_target: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let g = Guidance::default();
        Self {
            steps: 100,
            mode: "joint".into(),
            gamma_h: g.gamma_h,
            gamma_w: g.gamma_w,
            lambda_h: g.lambda_h,
            lambda_w: g.lambda_w,
            resample_cross_noise: true,
            samples_per_target: 64,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            circuits: CircuitsConfig::default(),
            embedding: EmbeddingConfig::default(),
            schedule: ScheduleConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::format(format!(
                "config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let c = &self.circuits;
        if c.qubits[0] == 0 || c.qubits[0] > c.qubits[1] || c.qubits[1] > crate::sim::MAX_QUBITS {
            return Err(invalid(format!("qubit range {:?}", c.qubits)));
        }
        if c.gates[0] > c.gates[1] || c.gates[1] > c.max_positions {
            return Err(invalid(format!(
                "gate range {:?} must fit {} positions",
                c.gates, c.max_positions
            )));
        }
        self.gate_set()?;
        if self.embedding.d_h <= self.gate_set()?.num_classes() {
            return Err(invalid("d_h must exceed the number of token classes"));
        }
        self.h_kind()?;
        FixedKind::from_name(&self.schedule.w).ok_or_else(|| invalid(format!("schedule w = {}", self.schedule.w)))?;
        self.target_shape()?;
        self.sample_config()?;
        self.train_config().validate()?;
        if self.schedule.steps < 2 || self.model.hidden == 0 || self.model.layers == 0 {
            return Err(invalid("schedule steps, hidden and layers must be positive"));
        }
        Ok(())
    }

    pub fn kinds(&self) -> Result<Vec<GateKind>> {
        self.circuits
            .kinds
            .iter()
            .map(|k| GateKind::from_name(k).ok_or_else(|| invalid(format!("unknown gate kind {k}"))))
            .collect()
    }

    pub fn gate_set(&self) -> Result<GateSet> {
        GateSet::new(&self.kinds()?)
    }

    pub fn temperature(&self) -> f64 {
        self.embedding
            .temperature
            .unwrap_or_else(|| default_temperature(self.embedding.d_h))
    }

    /// The embedding bases, rebuilt deterministically from the embedding seed.
    pub fn embedding_space(&self) -> Result<EmbeddingSpace> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.embedding.seed);
        EmbeddingSpace::build(self.gate_set()?, self.embedding.d_h, self.embedding.d_w, &mut rng)
    }

    fn h_kind(&self) -> Result<Option<FixedKind>> {
        match self.schedule.h.as_str() {
            "learned" => Ok(None),
            s => FixedKind::from_name(s)
                .map(Some)
                .ok_or_else(|| invalid(format!("schedule h = {s}"))),
        }
    }

    pub fn target_shape(&self) -> Result<TargetShape> {
        match self.schedule.target.as_str() {
            "linear" => Ok(TargetShape::Linear),
            "sin" => Ok(TargetShape::Sin),
            "sin2" => Ok(TargetShape::Sin2),
            s => Err(invalid(format!("hamming target {s}"))),
        }
    }

    pub fn hamming_target(&self) -> Result<HammingTarget> {
        Ok(HammingTarget::new(self.target_shape()?, self.gate_set()?.num_classes()))
    }

    pub fn learn_config(&self) -> LearnConfig {
        LearnConfig {
            steps: self.schedule.steps,
            samples: self.schedule.learn_samples,
            tol: self.schedule.learn_tol,
            temperature: Some(self.temperature()),
            ..LearnConfig::default()
        }
    }

    /// The `h` schedule: from CSV when given, else fixed or learned.
    /// Learning draws from a stream derived from the embedding seed so that
    /// every subcommand rebuilds the same schedule.
    pub fn schedule_h(&self, space: &EmbeddingSpace) -> Result<NoiseSchedule> {
        if let Some(path) = &self.schedule.h_csv {
            let f = std::io::BufReader::new(std::fs::File::open(path)?);
            return NoiseSchedule::read_csv(f);
        }
        match self.h_kind()? {
            Some(kind) => fixed_schedule(kind, self.schedule.steps),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.embedding.seed);
                rng.set_stream(1);
                let learned = learn_discrete_schedule(
                    space.token_basis(),
                    self.hamming_target()?,
                    &self.learn_config(),
                    &mut rng,
                )?;
                Ok(learned.schedule)
            }
        }
    }

    pub fn schedules(&self, space: &EmbeddingSpace) -> Result<Schedules> {
        let w_kind = FixedKind::from_name(&self.schedule.w).ok_or_else(|| invalid("schedule w"))?;
        Ok(Schedules {
            h: self.schedule_h(space)?,
            w: fixed_schedule(w_kind, self.schedule.steps)?,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            batch: t.batch,
            steps: t.steps,
            peak_lr: t.peak_lr,
            warmup_frac: t.warmup_frac,
            cfg_drop: t.cfg_drop,
            no_shuffle: t.no_shuffle,
            seed: self.seed,
        }
    }

    pub fn sample_config(&self) -> Result<SampleConfig> {
        let s = &self.sampler;
        let mode = SampleMode::from_name(&s.mode).ok_or_else(|| invalid(format!("sampler mode {}", s.mode)))?;
        if s.steps == 0 || s.samples_per_target == 0 {
            return Err(invalid("sampler steps and samples_per_target must be positive"));
        }
        Ok(SampleConfig {
            mode,
            steps: s.steps,
            guidance: Guidance {
                gamma_h: s.gamma_h,
                gamma_w: s.gamma_w,
                lambda_h: s.lambda_h,
                lambda_w: s.lambda_w,
            },
            resample_cross_noise: s.resample_cross_noise,
            record_trajectory: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_and_rejections() {
        assert_eq!(Config::from_toml("version = 1").unwrap(), Config::default());
        assert!(Config::from_toml("version = 2").is_err());
        assert!(Config::from_toml("").is_err());
        assert!(Config::from_toml("version = 1\nbogus = 3").is_err());
        assert!(Config::from_toml("version = 1\n[embedding]\nd_h = 6").is_err());
        assert!(Config::from_toml("version = 1\n[circuits]\nkinds = [\"t\"]").is_err());
    }
}
