use ndarray::Array1;
use rand::Rng;

use super::attention::{log_softmax, softmax};
use super::config::ModelConfig;
use super::decoder::{step_forward, DecoderState, StepCache};
use super::encoder::EncodedVideo;
use super::params::ModelParams;
use crate::corpus::EOS;

pub(crate) fn argmax(x: &Array1<f64>) -> u32 {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best as u32
}

/// Greedy decoding up to `max_len` steps. The returned tokens exclude BOS
/// and the terminating EOS.
pub fn greedy_decode(enc: &EncodedVideo, params: &ModelParams, cfg: &ModelConfig) -> Vec<u32> {
    greedy_decode_len(enc, params, cfg, cfg.max_len)
}

pub fn greedy_decode_len(enc: &EncodedVideo, params: &ModelParams, cfg: &ModelConfig, max_len: usize) -> Vec<u32> {
    let mut state = DecoderState::initial(cfg);
    let mut out = Vec::new();
    for _ in 0..max_len {
        let (logits, next, _) = step_forward(&state, enc, params);
        let w = argmax(&logits);
        if w == EOS {
            break;
        }
        out.push(w);
        state = next;
        state.prev_word = w;
    }
    out
}

/// A caption drawn from the model distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCaption {
    /// Drawn ids, including a final EOS when one was drawn.
    pub steps: Vec<u32>,
    /// Log-probability of each drawn id.
    pub log_probs: Vec<f64>,
}

impl SampledCaption {
    /// Drawn tokens without the trailing EOS.
    pub fn tokens(&self) -> &[u32] {
        match self.steps.last() {
            Some(&EOS) => &self.steps[..self.steps.len() - 1],
            _ => &self.steps,
        }
    }

    pub fn total_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }
}

fn draw(probs: &Array1<f64>, rng: &mut impl Rng) -> u32 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    // rounding left u above the final cumulative sum
    (0..probs.len()).rev().find(|&i| probs[i] > 0.0).unwrap_or(0) as u32
}

pub(crate) fn sample_with_trace(
    enc: &EncodedVideo,
    params: &ModelParams,
    cfg: &ModelConfig,
    rng: &mut impl Rng,
) -> (SampledCaption, Vec<Array1<f64>>, Vec<StepCache>) {
    let mut state = DecoderState::initial(cfg);
    let mut caption = SampledCaption {
        steps: Vec::new(),
        log_probs: Vec::new(),
    };
    let mut all_logits = Vec::new();
    let mut caches = Vec::new();
    for _ in 0..cfg.max_len {
        let (logits, next, cache) = step_forward(&state, enc, params);
        let w = draw(&softmax(logits.view()), rng);
        caption.steps.push(w);
        caption.log_probs.push(log_softmax(logits.view())[w as usize]);
        all_logits.push(logits);
        caches.push(cache);
        if w == EOS {
            break;
        }
        state = next;
        state.prev_word = w;
    }
    (caption, all_logits, caches)
}

/// Samples each token from `softmax(logits)` until EOS or `max_len`.
pub fn sample_decode(enc: &EncodedVideo, params: &ModelParams, cfg: &ModelConfig, rng: &mut impl Rng) -> SampledCaption {
    sample_with_trace(enc, params, cfg, rng).0
}
