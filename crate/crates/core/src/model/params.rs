use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;

pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

/// Affine map `y = w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    fn zeros(out: usize, inp: usize) -> Self {
        Linear {
            w: Array2::zeros((out, inp)),
            b: Array1::zeros(out),
        }
    }
}

/// LSTM weights. Rows of `w`/`b` are stacked gate blocks `[i; f; g; o]`
/// and columns are `[x; h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: Array2::zeros((4 * hidden, input + hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len() / 4
    }

    pub fn input(&self) -> usize {
        self.w.ncols() - self.hidden()
    }
}

/// Additive attention: `score_t = v·tanh(w_ctx·ctx_t + w_query·query)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_ctx: Array2<f64>,
    pub w_query: Array2<f64>,
    pub v: Array1<f64>,
}

impl AttentionParams {
    pub fn zeros(ctx: usize, query: usize, hidden: usize) -> Self {
        AttentionParams {
            w_ctx: Array2::zeros((hidden, ctx)),
            w_query: Array2::zeros((hidden, query)),
            v: Array1::zeros(hidden),
        }
    }
}

/// Every learnable tensor of the captioner.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub word_emb: Array2<f64>,
    pub topic_emb: Array2<f64>,
    pub app_proj: Linear,
    pub mot_proj: Linear,
    pub aud_proj: Linear,
    pub vis_lstm: LstmParams,
    pub aud_lstm: LstmParams,
    pub att_lstm: LstmParams,
    pub lang_lstm: LstmParams,
    pub vis_attn: AttentionParams,
    pub aud_attn: AttentionParams,
    pub out: Linear,
}

/// Role of a tensor for initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Weight,
    Bias,
    LstmBias,
}

macro_rules! tensor_list {
    ($p:expr, $mk:ident) => {
        vec![
            $mk!("word_emb", Weight, $p.word_emb),
            $mk!("topic_emb", Weight, $p.topic_emb),
            $mk!("app_proj.w", Weight, $p.app_proj.w),
            $mk!("app_proj.b", Bias, $p.app_proj.b),
            $mk!("mot_proj.w", Weight, $p.mot_proj.w),
            $mk!("mot_proj.b", Bias, $p.mot_proj.b),
            $mk!("aud_proj.w", Weight, $p.aud_proj.w),
            $mk!("aud_proj.b", Bias, $p.aud_proj.b),
            $mk!("vis_lstm.w", Weight, $p.vis_lstm.w),
            $mk!("vis_lstm.b", LstmBias, $p.vis_lstm.b),
            $mk!("aud_lstm.w", Weight, $p.aud_lstm.w),
            $mk!("aud_lstm.b", LstmBias, $p.aud_lstm.b),
            $mk!("att_lstm.w", Weight, $p.att_lstm.w),
            $mk!("att_lstm.b", LstmBias, $p.att_lstm.b),
            $mk!("lang_lstm.w", Weight, $p.lang_lstm.w),
            $mk!("lang_lstm.b", LstmBias, $p.lang_lstm.b),
            $mk!("vis_attn.w_ctx", Weight, $p.vis_attn.w_ctx),
            $mk!("vis_attn.w_query", Weight, $p.vis_attn.w_query),
            $mk!("vis_attn.v", Weight, $p.vis_attn.v),
            $mk!("aud_attn.w_ctx", Weight, $p.aud_attn.w_ctx),
            $mk!("aud_attn.w_query", Weight, $p.aud_attn.w_query),
            $mk!("aud_attn.v", Weight, $p.aud_attn.v),
            $mk!("out.w", Weight, $p.out.w),
            $mk!("out.b", Bias, $p.out.b),
        ]
    };
}

/// Read-only view of one named tensor.
#[derive(Debug, Clone, Copy)]
pub struct TensorRef<'a> {
    pub name: &'static str,
    pub kind: TensorKind,
    pub shape: &'a [usize],
    pub data: &'a [f64],
}

/// Mutable view of one named tensor.
#[derive(Debug)]
pub struct TensorMut<'a> {
    pub name: &'static str,
    pub kind: TensorKind,
    pub data: &'a mut [f64],
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        ModelParams {
            word_emb: Array2::zeros((cfg.vocab_size, cfg.e_word)),
            topic_emb: Array2::zeros((cfg.n_topics, cfg.e_topic)),
            app_proj: Linear::zeros(cfg.e_app, cfg.d_app),
            mot_proj: Linear::zeros(cfg.e_mot, cfg.d_mot),
            aud_proj: Linear::zeros(cfg.e_aud, cfg.d_aud),
            vis_lstm: LstmParams::zeros(cfg.e_app + cfg.e_mot, cfg.h_vis),
            aud_lstm: LstmParams::zeros(cfg.e_aud, cfg.h_aud),
            att_lstm: LstmParams::zeros(cfg.att_input(), cfg.h_att),
            lang_lstm: LstmParams::zeros(cfg.lang_input(), cfg.h_lang),
            vis_attn: AttentionParams::zeros(cfg.h_vis, cfg.h_att, cfg.d_attn),
            aud_attn: AttentionParams::zeros(cfg.h_aud, cfg.h_att, cfg.d_attn),
            out: Linear::zeros(cfg.vocab_size, cfg.h_lang),
        }
    }

    /// Uniform(-0.08, 0.08) weights and embeddings, zero biases, forget-gate
    /// biases at 1.0. Deterministic per seed.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut p = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in p.tensors_mut() {
            match t.kind {
                TensorKind::Weight => t.data.iter_mut().for_each(|v| *v = rng.gen_range(-INIT_RANGE..INIT_RANGE)),
                TensorKind::Bias => t.data.fill(0.0),
                TensorKind::LstmBias => {
                    let h = t.data.len() / 4;
                    t.data.fill(0.0);
                    t.data[h..2 * h].fill(FORGET_BIAS);
                }
            }
        }
        p
    }

    /// Tensors in a fixed order, which is also the checkpoint order.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        macro_rules! mk {
            ($name:expr, $kind:ident, $a:expr) => {
                TensorRef {
                    name: $name,
                    kind: TensorKind::$kind,
                    shape: $a.shape(),
                    data: $a.as_slice().expect("owned params are contiguous"),
                }
            };
        }
        tensor_list!(self, mk)
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        macro_rules! mk {
            ($name:expr, $kind:ident, $a:expr) => {
                TensorMut {
                    name: $name,
                    kind: TensorKind::$kind,
                    data: $a.as_slice_mut().expect("owned params are contiguous"),
                }
            };
        }
        tensor_list!(self, mk)
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn fill(&mut self, v: f64) {
        for t in self.tensors_mut() {
            t.data.fill(v);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Global L2 norm over all tensors.
    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// True when every tensor shape matches what `cfg` implies.
    pub fn matches_config(&self, cfg: &ModelConfig) -> bool {
        let reference = Self::zeros(cfg);
        self.tensors()
            .iter()
            .zip(reference.tensors())
            .all(|(a, b)| a.shape == b.shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig::uniform(6, 10, 3, 8)
    }

    #[test]
    fn init_deterministic_and_finite() {
        let a = ModelParams::init(&cfg(), 11);
        let b = ModelParams::init(&cfg(), 11);
        assert_eq!(a, b);
        assert!(a.all_finite());
        assert_ne!(a, ModelParams::init(&cfg(), 12));
    }

    #[test]
    fn forget_bias_and_ranges() {
        let p = ModelParams::init(&cfg(), 1);
        for lstm in [&p.vis_lstm, &p.aud_lstm, &p.att_lstm, &p.lang_lstm] {
            let h = lstm.hidden();
            assert!(lstm.b.iter().take(h).all(|&v| v == 0.0));
            assert!(lstm.b.iter().skip(h).take(h).all(|&v| v == 1.0));
            assert!(lstm.b.iter().skip(2 * h).all(|&v| v == 0.0));
        }
        for t in p.tensors() {
            if t.kind == TensorKind::Weight {
                assert!(t.data.iter().all(|v| v.abs() < INIT_RANGE));
            }
        }
        assert_eq!(p.tensors().len(), 24);
    }

    #[test]
    fn names_unique() {
        let p = ModelParams::zeros(&cfg());
        let mut names: Vec<_> = p.tensors().iter().map(|t| t.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 24);
        assert!(p.matches_config(&cfg()));
        assert!(!p.matches_config(&ModelConfig::uniform(7, 10, 3, 8)));
    }
}
