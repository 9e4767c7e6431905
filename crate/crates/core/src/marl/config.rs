use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, Optimizer, Sgd};
use crate::envs::NavConfig;
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::group::IrrepSpec;
use crate::nn::DEFAULT_LAYERS;

/// Hidden irreps used for training; narrower than the network default to keep runs short.
pub const TRAIN_HIDDEN: &str = "16x0e+4x1o";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Mlp,
    Segnn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Parse(format!("unknown optimizer {s:?} (expected sgd or adam)"))),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Mlp => "mlp",
            Arch::Segnn => "segnn",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Arch::Mlp),
            "segnn" => Ok(Arch::Segnn),
            _ => Err(Error::Parse(format!("unknown architecture {s:?} (expected mlp or segnn)"))),
        }
    }
}

/// Everything that determines a training run. Two runs with equal configs
/// produce identical parameters and logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub env: NavConfig,
    pub graph: GraphConfig,
    pub critic_arch: Arch,
    pub actor_arch: Arch,
    pub gamma: f64,
    /// Rewards are multiplied by this inside TD targets only; returns and
    /// logs stay in environment units.
    pub reward_scale: f64,
    /// Navigation episodes only end by the time limit, which the state does
    /// not encode; when set, TD targets bootstrap through those ends.
    pub bootstrap_time_limit: bool,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Only used by SGD.
    pub momentum: f64,
    pub max_grad_norm: Option<f64>,
    pub tau: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    /// Fraction of the episodes over which the noise decays linearly.
    pub noise_decay_fraction: f64,
    pub episodes: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Environment steps collected before the first update.
    pub warmup_steps: usize,
    /// Gradient updates happen every this many environment steps.
    pub update_every: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    /// Seed of the fixed evaluation episodes; shared across runs so returns
    /// are comparable.
    pub eval_seed: u64,
    pub invariancy_samples: usize,
    pub segnn_hidden: String,
    pub segnn_layers: usize,
    pub mlp_hidden: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            env: NavConfig::new(3),
            graph: GraphConfig::default(),
            critic_arch: Arch::Segnn,
            actor_arch: Arch::Segnn,
            gamma: 0.95,
            reward_scale: 0.05,
            bootstrap_time_limit: true,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            momentum: 0.9,
            max_grad_norm: Some(1.0),
            tau: 0.02,
            noise_start: 0.3,
            noise_end: 0.05,
            noise_decay_fraction: 0.5,
            episodes: 2000,
            seed: 0,
            buffer_capacity: 100_000,
            warmup_steps: 1000,
            update_every: 10,
            eval_interval: 100,
            eval_episodes: 50,
            eval_seed: 7_000_001,
            invariancy_samples: 50,
            segnn_hidden: TRAIN_HIDDEN.to_string(),
            segnn_layers: DEFAULT_LAYERS,
            mlp_hidden: 64,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.graph.validate(self.env.num_entities())?;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("discount {} outside (0, 1)", self.gamma));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad(format!("reward scale {} must be positive", self.reward_scale));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("soft-update rate {} outside (0, 1]", self.tau));
        }
        if self.batch_size == 0 || self.update_every == 0 || self.eval_interval == 0 {
            return bad("batch size, update cadence and eval interval must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad("replay capacity is smaller than one batch".into());
        }
        if !(self.actor_lr >= 0.0 && self.critic_lr >= 0.0 && (0.0..1.0).contains(&self.momentum)) {
            return bad("learning rates must be non-negative and momentum in [0, 1)".into());
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0) || !(0.0..=1.0).contains(&self.noise_decay_fraction) {
            return bad("noise scales must be non-negative and the decay fraction in [0, 1]".into());
        }
        if self.max_grad_norm.is_some_and(|m| !(m > 0.0)) {
            return bad("gradient clip must be positive".into());
        }
        self.hidden_spec()?.check_supported()?;
        Ok(())
    }

    pub fn make_optimizer(&self, lr: f64) -> Optimizer {
        match self.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(lr, self.momentum).with_max_grad_norm(self.max_grad_norm)),
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr).with_max_grad_norm(self.max_grad_norm)),
        }
    }

    pub fn hidden_spec(&self) -> Result<IrrepSpec> {
        self.segnn_hidden.parse()
    }

    /// Exploration scale for a 0-based episode index.
    pub fn noise_scale(&self, episode: usize) -> f64 {
        let span = self.noise_decay_fraction * self.episodes as f64;
        if span <= 0.0 {
            return self.noise_end;
        }
        let frac = (episode as f64 / span).min(1.0);
        self.noise_start + (self.noise_end - self.noise_start) * frac
    }

    /// `"[critic, actor]"`.
    pub fn label(&self) -> String {
        format!("[{}, {}]", self.critic_arch, self.actor_arch).to_uppercase()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainingConfig::default().validate().unwrap();
        assert_eq!(TrainingConfig::default().label(), "[SEGNN, SEGNN]");
    }

    #[test]
    fn noise_schedule() {
        let c = TrainingConfig {
            episodes: 100,
            ..Default::default()
        };
        assert_eq!(c.noise_scale(0), 0.3);
        assert!((c.noise_scale(25) - 0.175).abs() < 1e-12);
        assert!((c.noise_scale(50) - 0.05).abs() < 1e-12);
        assert!((c.noise_scale(99) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        for c in [
            TrainingConfig { gamma: 1.0, ..Default::default() },
            TrainingConfig { tau: 0.0, ..Default::default() },
            TrainingConfig { batch_size: 0, ..Default::default() },
            TrainingConfig { segnn_hidden: "4x2e".into(), ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn arch_parses() {
        assert_eq!("SEGNN".parse::<Arch>().unwrap(), Arch::Segnn);
        assert!("gcn".parse::<Arch>().is_err());
    }
}
