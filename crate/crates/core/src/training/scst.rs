//! Self-critical sequence training: REINFORCE with the greedy decode as
//! baseline and a CIDEr + sentence-BLEU reward.

use ndarray::{Array1, ArrayView1};

use super::config::RewardWeights;
use crate::metrics::{bleu4_sentence, cider, DocFreq};
use crate::model::softmax;

/// `w.cider·CIDEr/10 + w.bleu·BLEU4_sentence`. Empty captions score 0.
pub fn caption_reward<T: Ord + Clone>(hyp: &[T], refs: &[Vec<T>], df: &DocFreq<T>, w: RewardWeights) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    w.cider * cider(hyp, refs, df) / 10.0 + w.bleu * bleu4_sentence(hyp, refs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScstOutcome {
    pub loss: f64,
    /// `r(sampled) − r(greedy)`.
    pub advantage: f64,
    pub reward_sampled: f64,
    pub reward_greedy: f64,
}

/// `−(r(sampled) − r(greedy))·Σ_t log p_t`.
///
/// `sampled` excludes the EOS token while `log_probs` covers every drawn
/// step, EOS included.
pub fn scst_loss<T: Ord + Clone>(
    sampled: &[T],
    log_probs: &[f64],
    greedy: &[T],
    refs: &[Vec<T>],
    df: &DocFreq<T>,
    w: RewardWeights,
) -> ScstOutcome {
    let reward_sampled = caption_reward(sampled, refs, df, w);
    let reward_greedy = caption_reward(greedy, refs, df, w);
    let advantage = reward_sampled - reward_greedy;
    let loss = if advantage == 0.0 {
        0.0
    } else {
        -advantage * log_probs.iter().sum::<f64>()
    };
    ScstOutcome {
        loss,
        advantage,
        reward_sampled,
        reward_greedy,
    }
}

/// Gradient of `−A·log softmax(logits)[word]` with respect to the logits.
pub fn policy_logit_grad(logits: ArrayView1<f64>, word: u32, advantage: f64) -> Array1<f64> {
    let mut g = softmax(logits);
    g[word as usize] -= 1.0;
    g * advantage
}
