use ndarray::{s, Array1, ArrayView1};

use super::attention::{self, AttnCache};
use super::config::ModelConfig;
use super::encoder::{EncodedGrad, EncodedVideo};
use super::lstm::{self, add_outer, concat, LstmCache};
use super::params::ModelParams;
use crate::corpus::BOS;

/// Recurrent state of the two decoder LSTMs plus the previous word.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h_att: Array1<f64>,
    pub c_att: Array1<f64>,
    pub h_lang: Array1<f64>,
    pub c_lang: Array1<f64>,
    pub prev_word: u32,
}

impl DecoderState {
    /// Zero state with BOS as the previous word.
    pub fn initial(cfg: &ModelConfig) -> Self {
        DecoderState {
            h_att: Array1::zeros(cfg.h_att),
            c_att: Array1::zeros(cfg.h_att),
            h_lang: Array1::zeros(cfg.h_lang),
            c_lang: Array1::zeros(cfg.h_lang),
            prev_word: BOS,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    word: u32,
    att: LstmCache,
    vis: AttnCache,
    aud: AttnCache,
    lang: LstmCache,
    h_lang: Array1<f64>,
}

#[cfg(test)]
impl StepCache {
    pub fn vision_weights(&self) -> &Array1<f64> {
        &self.vis.weights
    }

    pub fn audio_weights(&self) -> &Array1<f64> {
        &self.aud.weights
    }
}

/// One top-down step: the attention LSTM reads the previous language state,
/// topic, mean vision context and previous word; its output queries the
/// vision and audio attentions independently; the language LSTM reads
/// `[h_att; c_vis; c_aud]` and feeds the vocabulary projection.
pub(crate) fn step_forward(
    state: &DecoderState,
    enc: &EncodedVideo,
    params: &ModelParams,
) -> (Array1<f64>, DecoderState, StepCache) {
    let word = params.word_emb.row(state.prev_word as usize);
    let att_in = concat(&[
        state.h_lang.view(),
        enc.topic_emb.view(),
        enc.vision_mean.view(),
        word.view(),
    ]);
    let (h_att, c_att, att) = lstm::forward(&params.att_lstm, att_in.view(), state.h_att.view(), state.c_att.view());
    let (c_vis, vis) = attention::forward(&params.vis_attn, h_att.view(), enc.vision_ctx.view(), enc.vision_keys.view());
    let (c_aud, aud) = attention::forward(&params.aud_attn, h_att.view(), enc.audio_ctx.view(), enc.audio_keys.view());
    let lang_in = concat(&[h_att.view(), c_vis.view(), c_aud.view()]);
    let (h_lang, c_lang, lang) = lstm::forward(&params.lang_lstm, lang_in.view(), state.h_lang.view(), state.c_lang.view());
    let logits = params.out.w.dot(&h_lang) + &params.out.b;
    let cache = StepCache {
        word: state.prev_word,
        att,
        vis,
        aud,
        lang,
        h_lang: h_lang.clone(),
    };
    let next = DecoderState {
        h_att,
        c_att,
        h_lang,
        c_lang,
        prev_word: state.prev_word,
    };
    (logits, next, cache)
}

/// Public single step with shape checks. The returned state keeps
/// `prev_word`; callers set it to the word chosen from the logits.
pub fn decoder_step(
    state: &DecoderState,
    enc: &EncodedVideo,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> crate::Result<(Array1<f64>, DecoderState)> {
    if state.h_att.len() != cfg.h_att
        || state.c_att.len() != cfg.h_att
        || state.h_lang.len() != cfg.h_lang
        || state.c_lang.len() != cfg.h_lang
    {
        return Err(crate::Error::invalid("decoder state widths do not match config"));
    }
    if state.prev_word as usize >= cfg.vocab_size {
        return Err(crate::Error::invalid(format!("word id {} out of vocabulary", state.prev_word)));
    }
    if enc.vision_ctx.ncols() != cfg.h_vis || enc.audio_ctx.ncols() != cfg.h_aud || enc.topic_emb.len() != cfg.e_topic {
        return Err(crate::Error::invalid("encoded video widths do not match config"));
    }
    let (logits, next, _) = step_forward(state, enc, params);
    Ok((logits, next))
}

/// Runs the decoder over a fixed input word sequence (first word is
/// normally BOS), keeping caches for backprop.
pub(crate) fn run_inputs(
    enc: &EncodedVideo,
    params: &ModelParams,
    cfg: &ModelConfig,
    mut next_input: impl FnMut(usize, Option<&Array1<f64>>) -> u32,
    n_steps: usize,
) -> (Vec<Array1<f64>>, Vec<StepCache>) {
    let mut state = DecoderState::initial(cfg);
    let mut logits = Vec::with_capacity(n_steps);
    let mut caches = Vec::with_capacity(n_steps);
    for t in 0..n_steps {
        state.prev_word = next_input(t, logits.last());
        let (l, next, cache) = step_forward(&state, enc, params);
        logits.push(l);
        caches.push(cache);
        state = next;
    }
    (logits, caches)
}

/// Backpropagates logit gradients through a cached unroll.
pub(crate) fn backward(
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncodedVideo,
    steps: &[StepCache],
    d_logits: &[Array1<f64>],
    grad: &mut ModelParams,
    d_enc: &mut EncodedGrad,
) {
    let mut dh_att = Array1::zeros(cfg.h_att);
    let mut dc_att = Array1::zeros(cfg.h_att);
    let mut dh_lang = Array1::zeros(cfg.h_lang);
    let mut dc_lang = Array1::zeros(cfg.h_lang);
    for (cache, dl) in steps.iter().zip(d_logits).rev() {
        add_outer(&mut grad.out.w, dl.view(), cache.h_lang.view());
        grad.out.b += dl;
        let dh = params.out.w.t().dot(dl) + &dh_lang;
        let (d_lang_in, dh_lang_prev, dc_lang_prev) =
            lstm::backward(&params.lang_lstm, &cache.lang, dh.view(), dc_lang.view(), &mut grad.lang_lstm);
        let (ha, hv) = (cfg.h_att, cfg.h_vis);
        let dq_v = attention::backward(
            &params.vis_attn,
            &cache.vis,
            enc.vision_ctx.view(),
            d_lang_in.slice(s![ha..ha + hv]),
            &mut grad.vis_attn,
            &mut d_enc.vision_ctx,
            &mut d_enc.vision_keys,
        );
        let dq_a = attention::backward(
            &params.aud_attn,
            &cache.aud,
            enc.audio_ctx.view(),
            d_lang_in.slice(s![ha + hv..]),
            &mut grad.aud_attn,
            &mut d_enc.audio_ctx,
            &mut d_enc.audio_keys,
        );
        let d_h_att = &d_lang_in.slice(s![..ha]) + &dq_v + &dq_a + &dh_att;
        let (d_att_in, dh_att_prev, dc_att_prev) =
            lstm::backward(&params.att_lstm, &cache.att, d_h_att.view(), dc_att.view(), &mut grad.att_lstm);
        let (hl, et) = (cfg.h_lang, cfg.e_topic);
        dh_lang = dh_lang_prev + d_att_in.slice(s![..hl]);
        dc_lang = dc_lang_prev;
        dh_att = dh_att_prev;
        dc_att = dc_att_prev;
        d_enc.topic_emb += &d_att_in.slice(s![hl..hl + et]);
        d_enc.vision_mean += &d_att_in.slice(s![hl + et..hl + et + hv]);
        let mut row = grad.word_emb.row_mut(cache.word as usize);
        row += &d_att_in.slice(s![hl + et + hv..]);
    }
}

/// Softmax probabilities of a logit vector.
pub fn probabilities(logits: ArrayView1<f64>) -> Array1<f64> {
    attention::softmax(logits)
}
