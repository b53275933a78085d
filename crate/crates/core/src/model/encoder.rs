use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::attention;
use super::config::ModelConfig;
use super::lstm::{self, LstmCache};
use super::params::{Linear, ModelParams};
use crate::corpus::FeatureBundle;

/// Video features promoted to f64, ready for the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoInput {
    pub appearance: Array2<f64>,
    pub motion: Array2<f64>,
    pub audio: Array2<f64>,
    pub topic_id: usize,
}

impl VideoInput {
    pub fn new(bundle: &FeatureBundle, topic_id: usize) -> Self {
        VideoInput {
            appearance: bundle.appearance.mapv(f64::from),
            motion: bundle.motion.mapv(f64::from),
            audio: bundle.audio.mapv(f64::from),
            topic_id,
        }
    }

    pub fn frames(&self) -> usize {
        self.appearance.nrows()
    }

    pub(crate) fn check(&self, cfg: &ModelConfig) -> crate::Result<()> {
        let t = self.frames();
        if t == 0 {
            return Err(crate::Error::invalid("video has no frames"));
        }
        if self.appearance.ncols() != cfg.d_app
            || self.motion.dim() != (t, cfg.d_mot)
            || self.audio.dim() != (t, cfg.d_aud)
        {
            return Err(crate::Error::invalid(format!(
                "feature dims {:?}/{:?}/{:?} do not match config {}/{}/{}",
                self.appearance.dim(),
                self.motion.dim(),
                self.audio.dim(),
                cfg.d_app,
                cfg.d_mot,
                cfg.d_aud
            )));
        }
        if self.topic_id >= cfg.n_topics {
            return Err(crate::Error::invalid(format!(
                "topic_id {} out of range (n_topics = {})",
                self.topic_id, cfg.n_topics
            )));
        }
        Ok(())
    }
}

/// Encoder outputs consumed by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVideo {
    /// T×h_vis vision LSTM states.
    pub vision_ctx: Array2<f64>,
    /// T×h_aud audio LSTM states.
    pub audio_ctx: Array2<f64>,
    pub topic_emb: Array1<f64>,
    pub topic_id: usize,
    pub(crate) vision_mean: Array1<f64>,
    pub(crate) vision_keys: Array2<f64>,
    pub(crate) audio_keys: Array2<f64>,
}

impl EncodedVideo {
    /// Rebuilds derived fields after the contexts were edited.
    pub fn refresh(&mut self, params: &ModelParams) {
        self.vision_mean = self.vision_ctx.mean_axis(Axis(0)).expect("nonempty");
        self.vision_keys = attention::keys(&params.vis_attn, self.vision_ctx.view());
        self.audio_keys = attention::keys(&params.aud_attn, self.audio_ctx.view());
    }

    pub fn frames(&self) -> usize {
        self.vision_ctx.nrows()
    }
}

pub(crate) struct EncoderCache {
    vis_steps: Vec<LstmCache>,
    aud_steps: Vec<LstmCache>,
}

/// Gradients flowing back into an [`EncodedVideo`].
#[derive(Debug, Clone)]
pub(crate) struct EncodedGrad {
    pub vision_ctx: Array2<f64>,
    pub audio_ctx: Array2<f64>,
    pub vision_keys: Array2<f64>,
    pub audio_keys: Array2<f64>,
    pub vision_mean: Array1<f64>,
    pub topic_emb: Array1<f64>,
}

impl EncodedGrad {
    pub fn zeros(enc: &EncodedVideo) -> Self {
        EncodedGrad {
            vision_ctx: Array2::zeros(enc.vision_ctx.dim()),
            audio_ctx: Array2::zeros(enc.audio_ctx.dim()),
            vision_keys: Array2::zeros(enc.vision_keys.dim()),
            audio_keys: Array2::zeros(enc.audio_keys.dim()),
            vision_mean: Array1::zeros(enc.vision_mean.len()),
            topic_emb: Array1::zeros(enc.topic_emb.len()),
        }
    }
}

fn project(x: &Array2<f64>, lin: &Linear) -> Array2<f64> {
    x.dot(&lin.w.t()) + &lin.b
}

fn run_lstm(p: &super::params::LstmParams, xs: &Array2<f64>) -> (Array2<f64>, Vec<LstmCache>) {
    let hd = p.hidden();
    let mut h = Array1::zeros(hd);
    let mut c = Array1::zeros(hd);
    let mut out = Array2::zeros((xs.nrows(), hd));
    let mut caches = Vec::with_capacity(xs.nrows());
    for (t, x) in xs.rows().into_iter().enumerate() {
        let (h2, c2, cache) = lstm::forward(p, x, h.view(), c.view());
        out.row_mut(t).assign(&h2);
        caches.push(cache);
        h = h2;
        c = c2;
    }
    (out, caches)
}

fn bptt(
    p: &super::params::LstmParams,
    caches: &[LstmCache],
    d_out: ArrayView2<f64>,
    grad: &mut super::params::LstmParams,
) -> Array2<f64> {
    let hd = p.hidden();
    let mut dh_next = Array1::zeros(hd);
    let mut dc_next = Array1::zeros(hd);
    let mut dx = Array2::zeros((caches.len(), p.input()));
    for t in (0..caches.len()).rev() {
        let dh = &d_out.row(t) + &dh_next;
        let (dxt, dh_prev, dc_prev) = lstm::backward(p, &caches[t], dh.view(), dc_next.view(), grad);
        dx.row_mut(t).assign(&dxt);
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dx
}

pub(crate) fn encode_forward(
    input: &VideoInput,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> crate::Result<(EncodedVideo, EncoderCache)> {
    input.check(cfg)?;
    let t = input.frames();
    let mut vis_in = Array2::zeros((t, cfg.e_app + cfg.e_mot));
    vis_in.slice_mut(s![.., ..cfg.e_app]).assign(&project(&input.appearance, &params.app_proj));
    vis_in.slice_mut(s![.., cfg.e_app..]).assign(&project(&input.motion, &params.mot_proj));
    let aud_in = project(&input.audio, &params.aud_proj);
    let (vision_ctx, vis_steps) = run_lstm(&params.vis_lstm, &vis_in);
    let (audio_ctx, aud_steps) = run_lstm(&params.aud_lstm, &aud_in);
    let mut enc = EncodedVideo {
        vision_ctx,
        audio_ctx,
        topic_emb: params.topic_emb.row(input.topic_id).to_owned(),
        topic_id: input.topic_id,
        vision_mean: Array1::zeros(0),
        vision_keys: Array2::zeros((0, 0)),
        audio_keys: Array2::zeros((0, 0)),
    };
    enc.refresh(params);
    Ok((
        enc,
        EncoderCache {
            vis_steps,
            aud_steps,
        },
    ))
}

pub(crate) fn encode_backward(
    input: &VideoInput,
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncodedVideo,
    cache: &EncoderCache,
    mut d: EncodedGrad,
    grad: &mut ModelParams,
) {
    attention::backward_keys(&params.vis_attn, enc.vision_ctx.view(), &d.vision_keys, &mut grad.vis_attn, &mut d.vision_ctx);
    attention::backward_keys(&params.aud_attn, enc.audio_ctx.view(), &d.audio_keys, &mut grad.aud_attn, &mut d.audio_ctx);
    let t = enc.frames() as f64;
    d.vision_ctx += &(&d.vision_mean / t).view().insert_axis(Axis(0));
    let mut topic_row = grad.topic_emb.row_mut(enc.topic_id);
    topic_row += &d.topic_emb;

    let d_vis_in = bptt(&params.vis_lstm, &cache.vis_steps, d.vision_ctx.view(), &mut grad.vis_lstm);
    let d_aud_in = bptt(&params.aud_lstm, &cache.aud_steps, d.audio_ctx.view(), &mut grad.aud_lstm);

    let d_app = d_vis_in.slice(s![.., ..cfg.e_app]);
    let d_mot = d_vis_in.slice(s![.., cfg.e_app..]);
    for (lin, dy, x) in [
        (&mut grad.app_proj, d_app, &input.appearance),
        (&mut grad.mot_proj, d_mot, &input.motion),
        (&mut grad.aud_proj, d_aud_in.view(), &input.audio),
    ] {
        ndarray::linalg::general_mat_mul(1.0, &dy.t(), x, 1.0, &mut lin.w);
        lin.b += &dy.sum_axis(Axis(0));
    }
}

/// Runs both encoder streams and looks up the topic embedding.
pub fn encode(bundle: &FeatureBundle, topic_id: usize, params: &ModelParams, cfg: &ModelConfig) -> crate::Result<EncodedVideo> {
    encode_input(&VideoInput::new(bundle, topic_id), params, cfg)
}

pub fn encode_input(input: &VideoInput, params: &ModelParams, cfg: &ModelConfig) -> crate::Result<EncodedVideo> {
    encode_forward(input, params, cfg).map(|(e, _)| e)
}
