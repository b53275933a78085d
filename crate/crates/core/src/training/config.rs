use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Training stage, in the order the scheduler visits them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "XE")]
    Xe,
    #[serde(rename = "ORACLE")]
    Oracle,
    #[serde(rename = "SCST")]
    Scst,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Xe, Stage::Oracle, Stage::Scst];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Xe => "XE",
            Stage::Oracle => "ORACLE",
            Stage::Scst => "SCST",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "XE" => Ok(Stage::Xe),
            "ORACLE" => Ok(Stage::Oracle),
            "SCST" => Ok(Stage::Scst),
            _ => Err(crate::Error::invalid(format!("unknown stage {s:?}"))),
        }
    }
}

/// Optimizer settings for one stage. `epochs` is the warmup length for XE,
/// the cap for ORACLE and the run length for SCST. `batch_size` counts
/// videos; every caption of a video is in the same batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Multiplies the learning rate after every epoch of the stage.
    #[serde(default = "unit_decay")]
    pub lr_decay: f64,
}

fn unit_decay() -> f64 {
    1.0
}

impl StageConfig {
    /// Learning rate for the stage's `k`-th epoch (from 0).
    pub fn lr_at(&self, k: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(k as i32)
    }
}

/// Weights of the sequence reward `w_cider·CIDEr/10 + w_bleu·BLEU4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub cider: f64,
    pub bleu: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { cider: 0.5, bleu: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub xe: StageConfig,
    pub oracle: StageConfig,
    pub scst: StageConfig,
    /// Decay constant of the teacher-forcing probability.
    pub mu: f64,
    /// Gumbel temperature for oracle word selection.
    pub tau: f64,
    /// Non-improving validation epochs before ORACLE hands over to SCST.
    pub patience: usize,
    pub reward: RewardWeights,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    pub min_count: usize,
    /// Fixed teacher-forcing probability replacing the decay schedule.
    pub teacher_force_override: Option<f64>,
    /// Adds Gumbel noise to oracle selection; off means plain argmax.
    pub oracle_noise: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            xe: StageConfig {
                epochs: 5,
                learning_rate: 1e-2,
                batch_size: 1,
                lr_decay: 0.95,
            },
            oracle: StageConfig {
                epochs: 30,
                learning_rate: 1e-3,
                batch_size: 1,
                lr_decay: 1.0,
            },
            scst: StageConfig {
                epochs: 20,
                learning_rate: 1e-4,
                batch_size: 5,
                lr_decay: 1.0,
            },
            mu: 12.0,
            tau: 1.0,
            patience: 3,
            reward: RewardWeights::default(),
            clip_norm: 5.0,
            min_count: 1,
            teacher_force_override: None,
            oracle_noise: true,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn stage(&self, s: Stage) -> &StageConfig {
        match s {
            Stage::Xe => &self.xe,
            Stage::Oracle => &self.oracle,
            Stage::Scst => &self.scst,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::invalid(m));
        for s in Stage::ALL {
            let c = self.stage(s);
            if !(c.learning_rate > 0.0 && c.learning_rate.is_finite()) {
                return bad(format!("{s} learning rate must be positive"));
            }
            if !(c.lr_decay > 0.0 && c.lr_decay <= 1.0) {
                return bad(format!("{s} lr_decay must be in (0, 1]"));
            }
            if c.batch_size == 0 {
                return bad(format!("{s} batch size must be positive"));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        let w = self.reward;
        if w.cider < 0.0 || w.bleu < 0.0 || ((w.cider + w.bleu) - 1.0).abs() > 1e-9 {
            return bad(format!("reward weights must be nonnegative and sum to 1, got {} + {}", w.cider, w.bleu));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return bad("clip_norm must be finite and nonnegative".into());
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        if let Some(p) = self.teacher_force_override {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("teacher_force_override {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}
