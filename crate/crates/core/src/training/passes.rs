//! Loss evaluation with optional backprop through decoder and encoder.

use ndarray::Array1;
use rand::Rng;

use super::loss::token_xe;
use super::oracle::{oracle_select_with_noise, sample_gumbel};
use super::scst::policy_logit_grad;
use crate::corpus::BOS;
use crate::model::{
    argmax, decoder_backward, encode_backward, encode_forward, log_softmax, run_inputs, EncodedGrad, ModelConfig,
    ModelParams, VideoInput,
};

/// Token-level totals of a cross-entropy pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XeStats {
    pub nll_sum: f64,
    pub tokens: usize,
    pub correct: usize,
}

impl XeStats {
    pub fn mean_loss(&self) -> f64 {
        self.nll_sum / self.tokens.max(1) as f64
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.tokens.max(1) as f64
    }

    pub fn add(&mut self, o: XeStats) {
        self.nll_sum += o.nll_sum;
        self.tokens += o.tokens;
        self.correct += o.correct;
    }
}

/// How the previous word is chosen at each decoder step.
pub(crate) enum InputPolicy<'a, R: Rng> {
    Teacher,
    /// Ground truth with probability `p`, otherwise the Gumbel-perturbed
    /// choice from the previous step's logits.
    Oracle { p: f64, tau: f64, noise: bool, rng: &'a mut R },
}

/// Cross-entropy over every caption of one video. `captions` are framed
/// `[BOS, .., EOS]`; each contributes `len − 1` predicted tokens. When
/// `grad` is given, `scale · d(nll_sum)` is accumulated into it.
pub(crate) fn xe_video<R: Rng>(
    params: &ModelParams,
    cfg: &ModelConfig,
    input: &VideoInput,
    captions: &[Vec<u32>],
    policy: &mut InputPolicy<'_, R>,
    grad: Option<(&mut ModelParams, f64)>,
) -> crate::Result<XeStats> {
    let (enc, enc_cache) = encode_forward(input, params, cfg)?;
    let mut stats = XeStats::default();
    let (mut grad, scale) = match grad {
        Some((g, s)) => (Some(g), s),
        None => (None, 0.0),
    };
    let mut d_enc = grad.as_ref().map(|_| EncodedGrad::zeros(&enc));
    for cap in captions {
        if cap.len() < 2 {
            continue;
        }
        let n = cap.len() - 1;
        let (logits, caches) = match policy {
            InputPolicy::Teacher => run_inputs(&enc, params, cfg, |t, _| cap[t], n),
            InputPolicy::Oracle { p, tau, noise, rng } => {
                let (p, tau, noise) = (*p, *tau, *noise);
                run_inputs(
                    &enc,
                    params,
                    cfg,
                    |t, prev| match prev {
                        None => cap[t],
                        Some(_) if rng.gen::<f64>() < p => cap[t],
                        Some(l) => {
                            let eta: Vec<f64> = if noise {
                                (0..l.len()).map(|_| sample_gumbel(&mut **rng)).collect()
                            } else {
                                vec![0.0; l.len()]
                            };
                            oracle_select_with_noise(l.view(), tau, &eta)
                        }
                    },
                    n,
                )
            }
        };
        let mut d_logits = Vec::with_capacity(n);
        for (t, l) in logits.iter().enumerate() {
            let target = cap[t + 1];
            let (nll, g) = token_xe(l.view(), target, scale);
            stats.nll_sum += nll;
            stats.tokens += 1;
            stats.correct += usize::from(argmax(l) == target);
            d_logits.push(g);
        }
        if let (Some(g), Some(de)) = (grad.as_deref_mut(), d_enc.as_mut()) {
            decoder_backward(params, cfg, &enc, &caches, &d_logits, g, de);
        }
    }
    if let (Some(g), Some(de)) = (grad, d_enc) {
        encode_backward(input, params, cfg, &enc, &enc_cache, de, g);
    }
    Ok(stats)
}

/// Mean teacher-forced cross-entropy over all tokens of a batch. With
/// `grad`, its exact gradient is written there (overwriting).
pub fn xe_objective(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[(&VideoInput, &[Vec<u32>])],
    mut grad: Option<&mut ModelParams>,
) -> crate::Result<f64> {
    let n_tokens: usize = batch
        .iter()
        .flat_map(|(_, caps)| caps.iter())
        .map(|c| c.len().saturating_sub(1))
        .sum();
    if n_tokens == 0 {
        return Err(crate::Error::invalid("batch has no target tokens"));
    }
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut stats = XeStats::default();
    let mut policy = InputPolicy::<rand_chacha::ChaCha8Rng>::Teacher;
    for (input, caps) in batch {
        let g = grad.as_deref_mut().map(|g| (g, 1.0 / n_tokens as f64));
        stats.add(xe_video(params, cfg, input, caps, &mut policy, g)?);
    }
    Ok(stats.mean_loss())
}

/// Policy-gradient loss `−A·Σ_t log p(steps_t)` of a fixed drawn sequence
/// (EOS included if it was drawn), fed back as decoder input.
pub fn policy_objective(
    params: &ModelParams,
    cfg: &ModelConfig,
    input: &VideoInput,
    steps: &[u32],
    advantage: f64,
    grad: Option<&mut ModelParams>,
) -> crate::Result<f64> {
    if steps.is_empty() {
        return Err(crate::Error::invalid("empty sequence"));
    }
    if let Some(&w) = steps.iter().find(|&&w| w as usize >= cfg.vocab_size) {
        return Err(crate::Error::invalid(format!("word id {w} out of vocabulary")));
    }
    let (enc, enc_cache) = encode_forward(input, params, cfg)?;
    let (logits, caches) = run_inputs(&enc, params, cfg, |t, _| if t == 0 { BOS } else { steps[t - 1] }, steps.len());
    let loss = -advantage
        * logits
            .iter()
            .zip(steps)
            .map(|(l, &w)| log_softmax(l.view())[w as usize])
            .sum::<f64>();
    if let Some(g) = grad {
        g.fill(0.0);
        let d_logits: Vec<Array1<f64>> = logits
            .iter()
            .zip(steps)
            .map(|(l, &w)| policy_logit_grad(l.view(), w, advantage))
            .collect();
        let mut d_enc = EncodedGrad::zeros(&enc);
        decoder_backward(params, cfg, &enc, &caches, &d_logits, g, &mut d_enc);
        encode_backward(input, params, cfg, &enc, &enc_cache, d_enc, g);
    }
    Ok(loss)
}
