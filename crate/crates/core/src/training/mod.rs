//! Three-stage training: teacher-forced cross-entropy, word-level oracle
//! with Gumbel-Max selection and decaying teacher forcing, then
//! self-critical sequence training on a CIDEr + BLEU reward.

mod adam;
mod config;
mod data;
mod loss;
mod oracle;
mod passes;
mod schedule;
mod scst;
mod trainer;

pub use adam::{adam_update, clip_global_norm, AdamState, BETA1, BETA2, EPSILON};
pub use config::{RewardWeights, Stage, StageConfig, TrainConfig};
pub use data::{load_examples, make_example, vocabulary_for, Example};
pub use loss::xe_loss;
pub use oracle::{gumbel_noise, oracle_select, oracle_select_with_noise, teacher_force_prob};
pub use passes::{policy_objective, xe_objective, XeStats};
pub use schedule::{next_stage, plateau_length, stage_scheduler, EpochRecord, TrainState};
pub use scst::{caption_reward, policy_logit_grad, scst_loss, ScstOutcome};
pub use trainer::{
    evaluate, mean_greedy_reward, teacher_forced, EpochSummary, Trainer, BEST_CHECKPOINT, LAST_CHECKPOINT, TRAIN_LOG,
};
