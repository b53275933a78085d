use serde::{Deserialize, Serialize};

use super::config::{Stage, TrainConfig};

/// One completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stage: Stage,
    pub loss: f64,
    pub val_cider: f64,
    /// Teacher-forcing probability, ORACLE epochs only.
    pub p: Option<f64>,
}

/// Everything besides tensors that a resumed run needs. Per-epoch random
/// streams are derived from `seed` and the epoch index, so no live
/// generator state is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainState {
    pub seed: u64,
    pub history: Vec<EpochRecord>,
    pub best_val_cider: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Consecutive non-improving ORACLE epochs.
    pub plateau: usize,
    /// Adam step count for the current stage.
    pub adam_t: u64,
}

impl TrainState {
    pub fn new(seed: u64) -> Self {
        TrainState {
            seed,
            history: Vec::new(),
            best_val_cider: None,
            best_epoch: None,
            plateau: 0,
            adam_t: 0,
        }
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    pub fn epochs_in(&self, stage: Stage) -> usize {
        self.history.iter().filter(|r| r.stage == stage).count()
    }

    pub fn last_stage(&self) -> Option<Stage> {
        self.history.last().map(|r| r.stage)
    }

    pub fn best_stage(&self) -> Option<Stage> {
        self.best_epoch.and_then(|e| self.history.get(e)).map(|r| r.stage)
    }

    /// Appends an epoch and refreshes the best-so-far and plateau fields.
    pub fn record(&mut self, rec: EpochRecord) {
        if self.best_val_cider.is_none_or(|b| rec.val_cider > b) {
            self.best_val_cider = Some(rec.val_cider);
            self.best_epoch = Some(self.history.len());
        }
        self.history.push(rec);
        self.plateau = plateau_length(&self.oracle_curve());
    }

    fn oracle_curve(&self) -> Vec<f64> {
        self.history
            .iter()
            .filter(|r| r.stage == Stage::Oracle)
            .map(|r| r.val_cider)
            .collect()
    }
}

/// Number of trailing epochs whose score did not exceed the best of all
/// earlier epochs. A tie with the best counts as not improving.
pub fn plateau_length(curve: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut run = 0;
    for (i, &v) in curve.iter().enumerate() {
        if i == 0 || v > best {
            best = v;
            run = 0;
        } else {
            run += 1;
        }
    }
    run
}

/// Stage for the next epoch, or `None` once SCST has run its epochs.
///
/// XE runs for `xe.epochs` warmup epochs. ORACLE follows until its
/// validation CIDEr fails to beat its best for `patience` consecutive
/// epochs, or its epoch cap is reached. SCST is then permanent.
pub fn next_stage(state: &TrainState, cfg: &TrainConfig) -> Option<Stage> {
    let stage = stage_scheduler(state, cfg);
    (stage != Stage::Scst || state.epochs_in(Stage::Scst) < cfg.scst.epochs).then_some(stage)
}

pub fn stage_scheduler(state: &TrainState, cfg: &TrainConfig) -> Stage {
    match state.last_stage() {
        Some(Stage::Scst) => Stage::Scst,
        Some(Stage::Oracle) => {
            if state.plateau >= cfg.patience || state.epochs_in(Stage::Oracle) >= cfg.oracle.epochs {
                Stage::Scst
            } else {
                Stage::Oracle
            }
        }
        _ if state.epochs_in(Stage::Xe) < cfg.xe.epochs => Stage::Xe,
        _ if cfg.oracle.epochs == 0 => Stage::Scst,
        _ => Stage::Oracle,
    }
}
