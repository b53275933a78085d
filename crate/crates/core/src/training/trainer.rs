use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_update, clip_global_norm, AdamState, BETA1, BETA2, EPSILON};
use super::config::{Stage, TrainConfig};
use super::data::Example;
use super::oracle::teacher_force_prob;
use super::passes::{xe_video, InputPolicy, XeStats};
use super::schedule::{next_stage, EpochRecord, TrainState};
use super::scst::{caption_reward, policy_logit_grad, scst_loss};
use crate::corpus::{Track, Vocabulary};
use crate::metrics::{compute_df, evaluate_corpus, DocFreq, MetricReport};
use crate::model::{
    decoder_backward, encode_backward, encode_forward, encode_input, greedy_decode, sample_with_trace, Checkpoint,
    EncodedGrad, ModelConfig, ModelParams,
};

pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const TRAIN_LOG: &str = "train_log.jsonl";

const STREAM_SHUFFLE: u64 = 0;
const STREAM_POLICY: u64 = 1;

/// Independent random stream for one purpose within one epoch.
fn epoch_rng(seed: u64, epoch: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 * 2 + purpose);
    rng
}

/// Outcome of one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub stage: Stage,
    pub loss: f64,
    pub val: Option<MetricReport>,
    /// Teacher-forcing probability, ORACLE epochs only.
    pub p: Option<f64>,
    pub lr: f64,
    /// Running token accuracy during XE and ORACLE epochs.
    pub train_accuracy: Option<f64>,
    /// Mean reward of sampled captions during SCST epochs.
    pub sample_reward: Option<f64>,
    pub wall_time: f64,
    /// Validation CIDEr beat every earlier epoch.
    pub improved: bool,
}

impl EpochSummary {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SavedRun {
    track: Track,
    train_config: TrainConfig,
    train_state: TrainState,
}

/// Owns parameters, optimizer state and data for a staged run.
pub struct Trainer {
    pub model_cfg: ModelConfig,
    pub cfg: TrainConfig,
    pub track: Track,
    pub vocab: Vocabulary,
    pub params: ModelParams,
    pub adam: AdamState,
    pub state: TrainState,
    train: Vec<Example>,
    val: Vec<Example>,
    train_df: DocFreq<u32>,
}

impl Trainer {
    /// Fresh run with parameters initialized from `cfg.seed`.
    pub fn new(
        model_cfg: ModelConfig,
        cfg: TrainConfig,
        track: Track,
        vocab: Vocabulary,
        train: Vec<Example>,
        val: Vec<Example>,
    ) -> crate::Result<Self> {
        let params = ModelParams::init(&model_cfg, cfg.seed);
        let state = TrainState::new(cfg.seed);
        Self::assemble(model_cfg, cfg, track, vocab, params, AdamState::new(&model_cfg), state, train, val)
    }

    /// Continues a run saved by [`Trainer::checkpoint`].
    pub fn resume(ckpt: Checkpoint, train: Vec<Example>, val: Vec<Example>) -> crate::Result<Self> {
        let saved: SavedRun = serde_json::from_value(ckpt.state)
            .map_err(|e| crate::Error::format("checkpoint", format!("training state: {e}")))?;
        let adam = match (ckpt.extra.iter().find(|g| g.0 == "adam_m"), ckpt.extra.iter().find(|g| g.0 == "adam_v")) {
            (Some((_, m)), Some((_, v))) => AdamState {
                m: m.clone(),
                v: v.clone(),
                t: saved.train_state.adam_t,
            },
            _ => return Err(crate::Error::format("checkpoint", "optimizer moments missing")),
        };
        Self::assemble(
            ckpt.config,
            saved.train_config,
            saved.track,
            ckpt.vocab,
            ckpt.params,
            adam,
            saved.train_state,
            train,
            val,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        model_cfg: ModelConfig,
        cfg: TrainConfig,
        track: Track,
        vocab: Vocabulary,
        params: ModelParams,
        adam: AdamState,
        state: TrainState,
        train: Vec<Example>,
        val: Vec<Example>,
    ) -> crate::Result<Self> {
        cfg.validate()?;
        model_cfg.validate()?;
        if vocab.len() != model_cfg.vocab_size {
            return Err(crate::Error::invalid(format!(
                "vocabulary has {} entries, model expects {}",
                vocab.len(),
                model_cfg.vocab_size
            )));
        }
        if train.is_empty() {
            return Err(crate::Error::invalid("training split is empty"));
        }
        for ex in train.iter().chain(&val) {
            ex.input.check(&model_cfg).map_err(|e| crate::Error::data(&ex.video_id, e.to_string()))?;
        }
        let train_df = compute_df(&train.iter().map(|e| e.ref_ids.clone()).collect::<Vec<_>>());
        Ok(Trainer {
            model_cfg,
            cfg,
            track,
            vocab,
            params,
            adam,
            state,
            train,
            val,
            train_df,
        })
    }

    pub fn train_examples(&self) -> &[Example] {
        &self.train
    }

    pub fn val_examples(&self) -> &[Example] {
        &self.val
    }

    /// Snapshot holding parameters, Adam moments and the run state.
    pub fn checkpoint(&self) -> Checkpoint {
        let saved = SavedRun {
            track: self.track,
            train_config: self.cfg.clone(),
            train_state: self.state.clone(),
        };
        Checkpoint {
            config: self.model_cfg,
            vocab: self.vocab.clone(),
            params: self.params.clone(),
            extra: vec![("adam_m".into(), self.adam.m.clone()), ("adam_v".into(), self.adam.v.clone())],
            state: serde_json::to_value(saved).expect("run state serializes"),
        }
    }

    pub fn next_stage(&self) -> Option<Stage> {
        next_stage(&self.state, &self.cfg)
    }

    /// Teacher-forcing probability the next ORACLE epoch would use.
    pub fn oracle_prob(&self) -> f64 {
        self.cfg
            .teacher_force_override
            .unwrap_or_else(|| teacher_force_prob(self.state.epochs_in(Stage::Oracle), self.cfg.mu))
    }

    /// Trains one epoch of `stage`, validates, and records it. Stages may
    /// only move forward; Adam moments are reset when the stage changes.
    pub fn run_epoch(&mut self, stage: Stage) -> crate::Result<EpochSummary> {
        let start = Instant::now();
        if let Some(last) = self.state.last_stage() {
            if stage < last {
                return Err(crate::Error::invalid(format!("cannot return to {stage} after {last}")));
            }
        }
        if self.state.last_stage() != Some(stage) {
            self.adam.reset();
        }
        let epoch = self.state.epoch();
        let sc = *self.cfg.stage(stage);
        let p = (stage == Stage::Oracle).then(|| self.oracle_prob());
        let lr = sc.lr_at(self.state.epochs_in(stage));

        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut epoch_rng(self.state.seed, epoch, STREAM_SHUFFLE));
        let mut rng = epoch_rng(self.state.seed, epoch, STREAM_POLICY);
        let mut grad = ModelParams::zeros(&self.model_cfg);

        let mut xe = XeStats::default();
        let (mut scst_sum, mut reward_sum) = (0.0, 0.0);
        for batch in order.chunks(sc.batch_size) {
            grad.fill(0.0);
            match stage {
                Stage::Xe | Stage::Oracle => {
                    let n_tokens: usize = batch
                        .iter()
                        .flat_map(|&i| &self.train[i].captions)
                        .map(|c| c.len().saturating_sub(1))
                        .sum();
                    let scale = 1.0 / n_tokens.max(1) as f64;
                    for &i in batch {
                        let ex = &self.train[i];
                        let mut policy = match p {
                            None => InputPolicy::Teacher,
                            Some(p) => InputPolicy::Oracle {
                                p,
                                tau: self.cfg.tau,
                                noise: self.cfg.oracle_noise,
                                rng: &mut rng,
                            },
                        };
                        let s = xe_video(
                            &self.params,
                            &self.model_cfg,
                            &ex.input,
                            &ex.captions,
                            &mut policy,
                            Some((&mut grad, scale)),
                        )?;
                        xe.add(s);
                    }
                }
                Stage::Scst => {
                    let b = batch.len() as f64;
                    for &i in batch {
                        let ex = &self.train[i];
                        let (enc, cache) = encode_forward(&ex.input, &self.params, &self.model_cfg)?;
                        let greedy = greedy_decode(&enc, &self.params, &self.model_cfg);
                        let (sample, logits, caches) = sample_with_trace(&enc, &self.params, &self.model_cfg, &mut rng);
                        let out = scst_loss(
                            sample.tokens(),
                            &sample.log_probs,
                            &greedy,
                            &ex.ref_ids,
                            &self.train_df,
                            self.cfg.reward,
                        );
                        scst_sum += out.loss;
                        reward_sum += out.reward_sampled;
                        if out.advantage != 0.0 {
                            let d_logits: Vec<Array1<f64>> = logits
                                .iter()
                                .zip(&sample.steps)
                                .map(|(l, &w)| policy_logit_grad(l.view(), w, out.advantage / b))
                                .collect();
                            let mut d_enc = EncodedGrad::zeros(&enc);
                            decoder_backward(&self.params, &self.model_cfg, &enc, &caches, &d_logits, &mut grad, &mut d_enc);
                            encode_backward(&ex.input, &self.params, &self.model_cfg, &enc, &cache, d_enc, &mut grad);
                        }
                    }
                }
            }
            clip_global_norm(&mut grad, self.cfg.clip_norm);
            adam_update(&mut self.params, &grad, &mut self.adam, lr, BETA1, BETA2, EPSILON)
                .map_err(|e| crate::Error::NonFinite(format!("epoch {epoch}: {e}")))?;
        }

        let n = self.train.len() as f64;
        let loss = match stage {
            Stage::Scst => scst_sum / n,
            _ => xe.mean_loss(),
        };
        if !loss.is_finite() {
            return Err(crate::Error::NonFinite(format!("epoch {epoch}: loss is {loss}")));
        }
        if !self.params.all_finite() {
            return Err(crate::Error::NonFinite(format!("epoch {epoch}: parameters diverged")));
        }
        let val = if self.val.is_empty() {
            None
        } else {
            Some(evaluate(&self.params, &self.model_cfg, &self.vocab, &self.val)?)
        };
        let val_cider = val.map_or(0.0, |r| r.cider);
        let best_before = self.state.best_val_cider;
        self.state.adam_t = self.adam.t;
        self.state.record(EpochRecord {
            epoch,
            stage,
            loss,
            val_cider,
            p,
        });
        Ok(EpochSummary {
            epoch,
            stage,
            loss,
            val,
            p,
            lr,
            train_accuracy: (stage != Stage::Scst).then(|| xe.accuracy()),
            sample_reward: (stage == Stage::Scst).then(|| reward_sum / n),
            wall_time: start.elapsed().as_secs_f64(),
            improved: best_before.is_none_or(|b| val_cider > b),
        })
    }

    /// Runs the scheduler to completion. With `out`, writes `last.ckpt`
    /// every epoch, `best.ckpt` on validation improvement, and appends one
    /// JSON line per epoch to `train_log.jsonl`.
    pub fn run(&mut self, out: Option<&Path>, mut on_epoch: impl FnMut(&EpochSummary)) -> crate::Result<()> {
        while let Some(stage) = self.next_stage() {
            let summary = self.run_epoch(stage)?;
            if let Some(dir) = out {
                let ckpt = self.checkpoint();
                ckpt.save(&dir.join(LAST_CHECKPOINT))?;
                if summary.improved {
                    ckpt.save(&dir.join(BEST_CHECKPOINT))?;
                }
                let log = dir.join(TRAIN_LOG);
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&log)
                    .map_err(|e| crate::Error::io(&log, e))?;
                writeln!(f, "{}", summary.to_json_line()).map_err(|e| crate::Error::io(&log, e))?;
            }
            on_epoch(&summary);
        }
        Ok(())
    }

    pub fn evaluate(&self, examples: &[Example]) -> crate::Result<MetricReport> {
        evaluate(&self.params, &self.model_cfg, &self.vocab, examples)
    }

    pub fn teacher_forced(&self, examples: &[Example]) -> crate::Result<XeStats> {
        teacher_forced(&self.params, &self.model_cfg, examples)
    }

    /// Mean greedy-caption reward over the training split.
    pub fn train_reward(&self) -> crate::Result<f64> {
        mean_greedy_reward(&self.params, &self.model_cfg, &self.train, &self.train_df, self.cfg.reward)
    }
}

/// Greedy-decodes every example and scores the captions against all of
/// its references.
pub fn evaluate(
    params: &ModelParams,
    cfg: &ModelConfig,
    vocab: &Vocabulary,
    examples: &[Example],
) -> crate::Result<MetricReport> {
    if examples.is_empty() {
        return Err(crate::Error::invalid("cannot evaluate an empty split"));
    }
    let mut hyps = Vec::with_capacity(examples.len());
    let mut refs = Vec::with_capacity(examples.len());
    for ex in examples {
        let enc = encode_input(&ex.input, params, cfg)?;
        hyps.push(vocab.decode(&greedy_decode(&enc, params, cfg)));
        refs.push(ex.refs.clone());
    }
    evaluate_corpus(&hyps, &refs)
}

/// Teacher-forced loss and next-token accuracy.
pub fn teacher_forced(params: &ModelParams, cfg: &ModelConfig, examples: &[Example]) -> crate::Result<XeStats> {
    let mut stats = XeStats::default();
    let mut policy = InputPolicy::<ChaCha8Rng>::Teacher;
    for ex in examples {
        stats.add(xe_video(params, cfg, &ex.input, &ex.captions, &mut policy, None)?);
    }
    Ok(stats)
}

/// Mean reward of greedy captions, scored on vocabulary ids.
pub fn mean_greedy_reward(
    params: &ModelParams,
    cfg: &ModelConfig,
    examples: &[Example],
    df: &DocFreq<u32>,
    w: super::RewardWeights,
) -> crate::Result<f64> {
    if examples.is_empty() {
        return Err(crate::Error::invalid("no examples"));
    }
    let mut total = 0.0;
    for ex in examples {
        let enc = encode_input(&ex.input, params, cfg)?;
        total += caption_reward(&greedy_decode(&enc, params, cfg), &ex.ref_ids, df, w);
    }
    Ok(total / examples.len() as f64)
}
